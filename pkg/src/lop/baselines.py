"""k-nearest-neighbour baseline with seeded random tie-breaking."""

from __future__ import annotations

import numpy as np
from scipy.spatial.distance import cdist
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.multiclass import check_classification_targets
from sklearn.utils.validation import check_is_fitted, validate_data

from .exceptions import DataError

MAX_LOO_NEIGHBORS = 25


def _vote(neighbor_codes, n_classes, seed):
    counts = np.bincount(neighbor_codes, minlength=n_classes)
    winners = np.flatnonzero(counts == counts.max())
    if winners.size == 1:
        return int(winners[0])
    return int(np.random.default_rng(seed).choice(winners))


def _sorted_neighbors(D):
    # stable sort: equal distances keep training-row order
    return np.argsort(D, axis=1, kind="stable")


class KNNClassifier(ClassifierMixin, BaseEstimator):
    """Majority vote among the Euclidean nearest training rows.

    Parameters
    ----------
    n_neighbors : int or "loo"
        Neighbour count, or ``"loo"`` to choose it by leave-one-out accuracy
        over ``1..min(max_neighbors, n - 1)`` (smallest on ties).
    max_neighbors : int
        Upper end of the leave-one-out grid.
    random_state : int
        Seed for breaking voting ties. Query ``j`` uses a generator seeded
        with ``(random_state, j)`` (``(random_state, j, k)`` during
        leave-one-out), so predictions do not depend on batching order.
    """

    def __init__(self, n_neighbors="loo", max_neighbors=MAX_LOO_NEIGHBORS, random_state=0):
        self.n_neighbors = n_neighbors
        self.max_neighbors = max_neighbors
        self.random_state = random_state

    def fit(self, X, y):
        X, y = validate_data(self, X, y, dtype=np.float64)
        check_classification_targets(y)
        if len(X) == 0:
            raise DataError("empty training set")
        self.classes_, self.codes_ = np.unique(y, return_inverse=True)
        self.X_ = X
        n = len(X)
        if self.n_neighbors == "loo":
            grid = np.arange(1, max(1, min(self.max_neighbors, n - 1)) + 1)
            self.loo_errors_ = self._loo_errors(grid)
            self.n_neighbors_ = int(grid[np.argmin(self.loo_errors_)])
        else:
            k = int(self.n_neighbors)
            if not 1 <= k <= n:
                raise DataError(f"n_neighbors={k} must lie in 1..{n}")
            self.n_neighbors_ = k
            self.loo_errors_ = None
        return self

    def _loo_errors(self, grid):
        n = len(self.X_)
        D = cdist(self.X_, self.X_)
        np.fill_diagonal(D, np.inf)
        order = _sorted_neighbors(D)[:, : n - 1]
        G = self.classes_.size
        errors = np.zeros(len(grid))
        for j in range(n):
            for t, k in enumerate(grid):
                if _vote(self.codes_[order[j, :k]], G, [self.random_state, j, int(k)]) != self.codes_[j]:
                    errors[t] += 1
        return errors / n

    def predict(self, X):
        check_is_fitted(self)
        X = validate_data(self, X, reset=False, dtype=np.float64)
        order = _sorted_neighbors(cdist(X, self.X_))[:, : self.n_neighbors_]
        G = self.classes_.size
        out = np.empty(len(X), dtype=np.int64)
        for j, row in enumerate(order):
            out[j] = _vote(self.codes_[row], G, [self.random_state, j])
        return self.classes_[out]
