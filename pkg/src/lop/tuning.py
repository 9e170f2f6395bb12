"""Admissible range for the core size ``k`` and its selection by training error."""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .ensemble import LPModel, aggregate, fit_local_ensemble, set_weights
from .exceptions import IntervalError, LopError

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class KInterval:
    lo: int
    hi: int

    def __iter__(self):
        return iter(range(self.lo, self.hi + 1))

    def __contains__(self, k):
        return self.lo <= k <= self.hi


@dataclass(frozen=True)
class TuningReport:
    ks: tuple
    errors: tuple
    selected: int

    def to_csv(self, path) -> None:
        with Path(path).open("w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["k", "error"])
            for k, e in zip(self.ks, self.errors):
                writer.writerow([k, repr(float(e))])


def k_interval(n, group_counts, n_classes=None) -> KInterval:
    """``[G - 1, min(floor(n / 4), min_g n_g - 1)]``.

    The lower bound gives LDA room for ``G - 1`` discriminant directions,
    ``floor(n / 4)`` keeps three observations per local dimension after
    removing the core, and ``min_g n_g - 1`` leaves every class at least one
    observation outside any core.
    """
    counts = np.asarray(group_counts, dtype=np.int64)
    G = counts.size if n_classes is None else int(n_classes)
    if G < 2:
        raise IntervalError(f"need at least two classes, got {G}")
    if counts.size != G or np.any(counts < 1):
        raise IntervalError(f"group counts {counts.tolist()} do not describe {G} nonempty classes")
    lo = G - 1
    by_size = int(n) // 4
    by_class = int(counts.min()) - 1
    hi = min(by_size, by_class)
    if lo > hi:
        which = (f"n/4 = {by_size}" if by_size <= by_class
                 else f"smallest class size - 1 = {by_class}")
        raise IntervalError(f"no admissible k: lower bound G-1 = {lo} exceeds {which}")
    return KInterval(lo, hi)


def training_error(model: LPModel, codes, denominator="n", scheme="weighted") -> float:
    """Misclassification rate on the training data, leaving each row's own cores out.

    Row ``j`` is scored only by local models whose core does not contain it.
    ``denominator="n"`` divides by the number of rows; ``"n-k"`` divides by
    ``n - k`` instead.
    """
    if model.train_posteriors is None:
        raise LopError("training posteriors are not available for this model")
    codes = np.asarray(codes, dtype=np.int64)
    n = codes.size
    weights = model.weights if scheme == "weighted" else None
    post = aggregate(model.train_posteriors, weights, model.core_mask(n))
    wrong = int(np.sum(np.argmax(post, axis=1) != codes))
    if denominator == "n":
        return wrong / n
    if denominator == "n-k":
        return wrong / (n - model.k)
    raise ValueError(f"denominator must be 'n' or 'n-k', got {denominator!r}")


def tune_k(X, codes, mode="strict", scheme="weighted", exclude_core=False,
           denominator="n", n_jobs=None, interval=None):
    """Fit the ensemble for every admissible ``k``; keep the one with least training error.

    Ties go to the smallest ``k``. Candidates whose fit fails numerically are
    reported with error ``nan`` and skipped.

    Returns ``(model, report)``.
    """
    codes = np.asarray(codes, dtype=np.int64)
    counts = np.bincount(codes)
    if interval is None:
        interval = k_interval(codes.size, counts, counts.size)
    ks, errors = [], []
    best, best_err = None, np.inf
    for k in interval:
        try:
            model = set_weights(fit_local_ensemble(X, codes, k, mode, n_jobs), codes, exclude_core)
            err = training_error(model, codes, denominator, scheme)
        except LopError as exc:
            log.warning("k=%d skipped: %s", k, exc)
            err, model = float("nan"), None
        ks.append(k)
        errors.append(err)
        if model is not None and err < best_err:
            best, best_err = model, err
    if best is None:
        raise LopError(f"no k in [{interval.lo}, {interval.hi}] could be fitted")
    return best, TuningReport(tuple(ks), tuple(errors), best.k)
