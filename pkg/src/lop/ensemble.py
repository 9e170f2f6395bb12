"""Ensemble of local LDA models and quality-weighted posterior aggregation.

Classes are handled as 0-based integer codes here; mapping to original
labels is done by :class:`lop.classifier.LocalProjectionClassifier`.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field, replace

import numpy as np

from ._parallel import ordered_map
from .exceptions import LopError
from .lda import LDAModel, expand_posterior, fit_lda, lda_posterior
from .localproj import Core, build_core, project

SCHEMES = ("weighted", "unweighted")


@dataclass(frozen=True)
class LocalModel:
    core: Core
    lda: LDAModel

    def posterior(self, X, n_classes: int) -> np.ndarray:
        z, od, _ = project(self.core, X)
        rep = np.column_stack([z, od])
        return expand_posterior(self.lda, lda_posterior(self.lda, rep), n_classes)


@dataclass(frozen=True)
class LPModel:
    """Fitted local-projection ensemble.

    ``weights``, ``q_plus`` and ``q_minus`` are ``(n_models, n_classes)``;
    ``train_posteriors[i, j]`` is the posterior of training row ``j`` under
    local model ``i`` and is kept only in memory.
    """

    k: int
    mode: str
    n_classes: int
    locals: tuple
    weights: np.ndarray | None = None
    q_plus: np.ndarray | None = None
    q_minus: np.ndarray | None = None
    fingerprint: str = ""
    train_posteriors: np.ndarray | None = field(default=None, repr=False, compare=False)

    @property
    def n_models(self) -> int:
        return len(self.locals)

    def core_mask(self, n_rows: int) -> np.ndarray:
        """Boolean ``(n_models, n_rows)``: row ``j`` is a member of core ``i``."""
        mask = np.zeros((self.n_models, n_rows), dtype=bool)
        for i, lm in enumerate(self.locals):
            mask[i, lm.core.members] = True
        return mask


def fingerprint(X, codes) -> str:
    h = hashlib.sha256()
    h.update(np.ascontiguousarray(X, dtype=float).tobytes())
    h.update(np.ascontiguousarray(codes, dtype=np.int64).tobytes())
    return h.hexdigest()


def _fit_one(X, codes, i, k, mode, n_classes):
    try:
        core = build_core(X, codes, i, k, mode)
        z, od, _ = project(core, X)
        rep = np.column_stack([z, od])
        keep = np.ones(len(X), dtype=bool)
        keep[core.members] = False
        # A class reduced to fewer than two rows by the exclusion cannot be
        # estimated; it is left out of this local model (posterior 0).
        counts = np.bincount(codes[keep], minlength=n_classes)
        keep &= counts[codes] >= 2
        lda = fit_lda(rep[keep], codes[keep])
        post = expand_posterior(lda, lda_posterior(lda, rep), n_classes)
    except LopError as exc:
        raise type(exc)(f"local model of observation {i}: {exc}") from exc
    return LocalModel(core, lda), post


def fit_local_ensemble(X, codes, k, mode="strict", n_jobs=None) -> LPModel:
    """Fit one local LDA model per training observation (weights left unset).

    Each local LDA is fitted on the local-space representation of all rows
    outside the owner's core.
    """
    X = np.asarray(X, dtype=float)
    codes = np.asarray(codes, dtype=np.int64)
    n_classes = int(codes.max()) + 1
    results = ordered_map(lambda i: _fit_one(X, codes, i, k, mode, n_classes), range(len(X)), n_jobs)
    locals_ = tuple(r[0] for r in results)
    posts = np.stack([r[1] for r in results])
    return LPModel(int(k), mode, n_classes, locals_, fingerprint=fingerprint(X, codes), train_posteriors=posts)


def quality_weights(posteriors, codes, mask=None):
    """Per-model, per-class quality weights ``exp(q_plus - q_minus)``.

    ``posteriors`` is ``(n_models, n_rows, G)``. ``q_plus[i, g]`` is the mean
    posterior of class ``g`` over rows of class ``g`` and ``q_minus[i, g]`` the
    mean over all other rows. With ``mask`` (``True`` = drop), rows are
    excluded per model, e.g. to leave out core members.

    Returns ``(weights, q_plus, q_minus)``.
    """
    P = np.asarray(posteriors, dtype=float)
    codes = np.asarray(codes, dtype=np.int64)
    n_models, n_rows, G = P.shape
    onehot = np.zeros((n_rows, G))
    onehot[np.arange(n_rows), codes] = 1.0
    use = np.ones((n_models, n_rows)) if mask is None else (~np.asarray(mask)).astype(float)
    in_sum = np.einsum("ij,ijg,jg->ig", use, P, onehot)
    out_sum = np.einsum("ij,ijg,jg->ig", use, P, 1.0 - onehot)
    n_in = use @ onehot
    n_out = use.sum(axis=1, keepdims=True) - n_in
    with np.errstate(invalid="ignore", divide="ignore"):
        q_plus = np.where(n_in > 0, in_sum / n_in, 0.0)
        q_minus = np.where(n_out > 0, out_sum / n_out, 0.0)
    return np.exp(q_plus - q_minus), q_plus, q_minus


def set_weights(model: LPModel, codes, exclude_core=False) -> LPModel:
    """Return ``model`` with quality weights computed from its training posteriors."""
    if model.train_posteriors is None:
        raise LopError("training posteriors are not available for this model")
    mask = model.core_mask(model.train_posteriors.shape[1]) if exclude_core else None
    w, qp, qm = quality_weights(model.train_posteriors, codes, mask)
    return replace(model, weights=w, q_plus=qp, q_minus=qm)


def aggregate(posteriors, weights=None, mask=None):
    """Aggregate ``(n_models, n_rows, G)`` posteriors into ``(n_rows, G)``.

    Per class, posteriors are averaged across models with that class's
    weights (plain mean when ``weights`` is None), then each row is
    normalised to sum to one. ``mask`` (``True`` = drop) removes individual
    model/row pairs, renormalising the weights over the retained models.
    """
    P = np.asarray(posteriors, dtype=float)
    n_models, n_rows, G = P.shape
    W = np.ones((n_models, G)) if weights is None else np.asarray(weights, dtype=float)
    use = np.ones((n_models, n_rows)) if mask is None else (~np.asarray(mask)).astype(float)
    num = np.einsum("ij,ig,ijg->jg", use, W, P)
    den = use.T @ W
    if np.any(den <= 0):
        bad = int(np.flatnonzero(np.any(den <= 0, axis=1))[0])
        raise LopError(f"row {bad} is not scored by any local model")
    tilde = num / den
    return tilde / tilde.sum(axis=1, keepdims=True)


def model_posteriors(model: LPModel, X, n_jobs=None) -> np.ndarray:
    """Posteriors of every local model for the rows of ``X``: ``(n_models, n_rows, G)``."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    return np.stack(ordered_map(lambda lm: lm.posterior(X, model.n_classes), model.locals, n_jobs))


def aggregate_posterior(model: LPModel, X, scheme="weighted", n_jobs=None) -> np.ndarray:
    """Aggregated posteriors ``(n_rows, G)`` for new observations."""
    if scheme not in SCHEMES:
        raise ValueError(f"scheme must be one of {SCHEMES}, got {scheme!r}")
    if scheme == "weighted" and model.weights is None:
        raise LopError("weights have not been computed")
    weights = model.weights if scheme == "weighted" else None
    return aggregate(model_posteriors(model, X, n_jobs), weights)


def classify(posteriors) -> np.ndarray:
    """Index of the largest posterior per row; ties go to the lowest index."""
    return np.argmax(np.atleast_2d(posteriors), axis=1)
