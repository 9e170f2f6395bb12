"""Linear discriminant analysis with a pooled within-group covariance.

Class priors are uniform: the posterior is the normalised Gaussian density
of each class, without weighting by class frequency. This differs from
the proportional priors used by e.g. ``sklearn.discriminant_analysis``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular
from scipy.special import logsumexp
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.multiclass import check_classification_targets
from sklearn.utils.validation import check_is_fitted, validate_data

from .exceptions import DataError, NumericError

RIDGE_START = 1e-8
RIDGE_MAX = 1e-2
_LOG_2PI = np.log(2.0 * np.pi)


@dataclass(frozen=True)
class LDAModel:
    class_ids: np.ndarray
    means: np.ndarray
    pooled_cov: np.ndarray
    chol: np.ndarray
    log_det: float
    ridge: float = 0.0
    n_obs: int = 0

    @property
    def dim(self) -> int:
        return self.means.shape[1]


def _try_cholesky(S):
    try:
        L = np.linalg.cholesky(S)
    except np.linalg.LinAlgError:
        return None
    diag = np.diag(L)
    if not np.all(np.isfinite(L)) or diag.min() ** 2 <= S.shape[0] * np.finfo(float).eps * diag.max() ** 2:
        return None
    return L


def fit_lda(points, labels) -> LDAModel:
    """Fit class means and the pooled within-group covariance.

    The covariance is the sum of per-class scatter matrices divided by
    ``m - G'`` (``G'`` present classes). If it cannot be factorised, a ridge
    of ``eps * trace / d`` is added with ``eps`` growing tenfold from 1e-8 to
    1e-2.
    """
    X = np.asarray(points, dtype=float)
    labels = np.asarray(labels)
    if X.ndim != 2 or X.shape[0] != labels.shape[0]:
        raise DataError(f"points {X.shape} and labels {labels.shape} do not match")
    class_ids, inverse, counts = np.unique(labels, return_inverse=True, return_counts=True)
    if class_ids.size < 2:
        raise DataError("LDA needs at least two classes")
    if np.any(counts < 2):
        raise DataError(f"class {class_ids[np.argmin(counts)]} has a single observation")
    m, d = X.shape
    means = np.zeros((class_ids.size, d))
    np.add.at(means, inverse, X)
    means /= counts[:, None]
    resid = X - means[inverse]
    S = resid.T @ resid / (m - class_ids.size)
    S = (S + S.T) / 2.0

    ridge = 0.0
    L = _try_cholesky(S)
    if L is None:
        base = np.trace(S) / d
        if not base > 0:
            base = 1.0
        eps = RIDGE_START
        while eps <= RIDGE_MAX * (1 + 1e-9):
            L = _try_cholesky(S + eps * base * np.eye(d))
            if L is not None:
                ridge = eps * base
                break
            eps *= 10.0
        else:
            raise NumericError("pooled covariance is singular even after ridge regularisation")
        S = S + ridge * np.eye(d)
    log_det = 2.0 * float(np.sum(np.log(np.diag(L))))
    return LDAModel(class_ids, means, S, L, log_det, ridge, m)


def log_densities(model: LDAModel, X) -> np.ndarray:
    """Gaussian log-densities ``log h_g(x)``, one column per fitted class."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    out = np.empty((X.shape[0], model.class_ids.size))
    for g, mu in enumerate(model.means):
        w = solve_triangular(model.chol, (X - mu).T, lower=True, check_finite=False)
        out[:, g] = -0.5 * np.einsum("ij,ij->j", w, w)
    out -= 0.5 * (model.dim * _LOG_2PI + model.log_det)
    return out


def lda_posterior(model: LDAModel, X) -> np.ndarray:
    """Posterior over the fitted classes, rows summing to one."""
    logh = log_densities(model, X)
    return np.exp(logh - logsumexp(logh, axis=1, keepdims=True))


def expand_posterior(model: LDAModel, post, n_classes: int) -> np.ndarray:
    """Scatter posteriors into ``n_classes`` columns; classes absent from the fit get 0.

    ``model.class_ids`` are taken as 0-based column indices.
    """
    post = np.atleast_2d(post)
    out = np.zeros((post.shape[0], n_classes))
    out[:, model.class_ids] = post
    return out


class FullRankLDA(ClassifierMixin, BaseEstimator):
    """LDA after projecting onto the span of the centred training data.

    Works for flat data (more variables than observations): the data are
    reduced to their numerical rank with an SVD before fitting.

    Parameters
    ----------
    tol : float
        Relative singular-value cut-off determining the rank.
    """

    def __init__(self, tol=1e-10):
        self.tol = tol

    def fit(self, X, y):
        X, y = validate_data(self, X, y)
        check_classification_targets(y)
        self.classes_, codes = np.unique(y, return_inverse=True)
        self.center_ = X.mean(axis=0)
        _, s, vt = np.linalg.svd(X - self.center_, full_matrices=False)
        rank = int(np.sum(s > self.tol * s[0])) if s.size and s[0] > 0 else 0
        if rank < self.classes_.size - 1:
            raise DataError(f"data rank {rank} is below G-1 = {self.classes_.size - 1}")
        self.components_ = vt[:rank].T
        self.lda_ = fit_lda((X - self.center_) @ self.components_, codes)
        return self

    def transform(self, X):
        check_is_fitted(self)
        X = validate_data(self, X, reset=False)
        return (X - self.center_) @ self.components_

    def predict_proba(self, X):
        return expand_posterior(self.lda_, lda_posterior(self.lda_, self.transform(X)), self.classes_.size)

    def predict(self, X):
        return self.classes_[np.argmax(self.predict_proba(X), axis=1)]

    @property
    def rank_(self):
        return self.components_.shape[1]


def full_rank_lda(train) -> FullRankLDA:
    """Fit :class:`FullRankLDA` on a :class:`~lop.dataset.LabeledDataset`."""
    return FullRankLDA().fit(train.features, train.labels)
