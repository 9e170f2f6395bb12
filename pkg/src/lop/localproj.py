"""Cores of same-class nearest neighbours and their local discrimination spaces.

For an observation ``x_i`` the core is ``x_i`` together with its nearest
neighbours from the same class. The core is centred and scaled with its
own mean and standard deviation, and the right singular vectors of the
transformed core span the core space. Every observation is then described
by its scores inside the core space plus its orthogonal distance to it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import DataError, DegenerateCoreError

MODES = ("strict", "rank_adjusted")
SCALE_FLOOR = 1e-12
RANK_TOL = 1e-10


@dataclass(frozen=True)
class Core:
    owner: int
    members: np.ndarray
    center: np.ndarray
    scale: np.ndarray
    basis: np.ndarray
    singular_values: np.ndarray

    @property
    def dim(self) -> int:
        """Dimension of the core space (number of basis columns)."""
        return self.basis.shape[1]


@dataclass(frozen=True)
class LocalSpace:
    scores: np.ndarray
    od: np.ndarray
    sd: np.ndarray

    @property
    def representation(self) -> np.ndarray:
        """Scores with the orthogonal distance appended as last column."""
        return np.column_stack([self.scores, self.od])


def _check_mode(mode):
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")


def _neighbour_order(X, y, i):
    """Same-class rows ordered by distance to row ``i``; ``i`` first, ties by index."""
    same = np.flatnonzero(y == y[i])
    others = same[same != i]
    d2 = np.einsum("ij,ij->i", X[others] - X[i], X[others] - X[i])
    return np.concatenate([[i], others[np.argsort(d2, kind="stable")]])


def core_center_scale(X, members):
    """Mean and sample standard deviation of the member rows.

    Coordinates with standard deviation below ``1e-12`` (including every
    coordinate of a single-member core) get scale 1.
    """
    pts = np.asarray(X, dtype=float)[np.asarray(members)]
    center = pts.mean(axis=0)
    if len(pts) > 1:
        scale = pts.std(axis=0, ddof=1)
    else:
        scale = np.ones(pts.shape[1])
    scale = np.where(scale < SCALE_FLOOR, 1.0, scale)
    return center, scale


def _svd_basis(X, members, center, scale):
    pts = (np.asarray(X, dtype=float)[np.asarray(members)] - center) / scale
    _, s, vt = np.linalg.svd(pts, full_matrices=False)
    if s.size == 0 or s[0] == 0.0:
        return np.zeros((pts.shape[1], 0)), np.zeros(0)
    keep = s > RANK_TOL * s[0]
    return vt[keep].T.copy(), s[keep].copy()


def _affine_rank(X, members):
    center, scale = core_center_scale(X, members)
    return _svd_basis(X, members, center, scale)[1].size


def knn_class_core(X, y, i, k, mode="strict"):
    """Row indices of the core of observation ``i``.

    In ``strict`` mode these are the ``k`` nearest observations of the same
    class (``i`` itself first; equal distances resolved by lower row index).
    In ``rank_adjusted`` mode same-class observations are appended in order
    of distance until the members span an affine subspace of dimension
    ``k - 1``; observations that do not raise the dimension stay in the core
    but do not count towards ``k``.
    """
    _check_mode(mode)
    X = np.asarray(X, dtype=float)
    y = np.asarray(y)
    if k < 1:
        raise DataError(f"k must be >= 1, got {k}")
    order = _neighbour_order(X, y, i)
    if mode == "strict":
        if order.size < k:
            raise DataError(f"class of observation {i} has {order.size} members, fewer than k={k}")
        return order[:k].copy()
    members = [int(order[0])]
    rank = 0
    for j in order[1:]:
        if rank == k - 1:
            break
        members.append(int(j))
        rank = _affine_rank(X, members)
    if rank < k - 1:
        raise DegenerateCoreError(
            f"class of observation {i} spans only {rank} dimensions; cannot reach k-1={k - 1}"
        )
    return np.array(members, dtype=np.int64)


def core_basis(X, members, center, scale, mode="strict"):
    """Orthonormal basis of the core space and its singular values.

    Singular values at or below ``1e-10`` times the largest are dropped. In
    strict mode the core must have full affine rank ``len(members) - 1``.
    """
    basis, s = _svd_basis(X, members, center, scale)
    if mode == "strict" and s.size < len(members) - 1:
        raise DegenerateCoreError(
            f"core {list(np.asarray(members))} has affine rank {s.size} < {len(members) - 1}; "
            "remove linearly dependent observations or use mode='rank_adjusted'"
        )
    return basis, s


def build_core(X, y, i, k, mode="strict") -> Core:
    members = knn_class_core(X, y, i, k, mode)
    center, scale = core_center_scale(X, members)
    basis, s = core_basis(X, members, center, scale, mode)
    for arr in (members, center, scale, basis, s):
        arr.setflags(write=False)
    return Core(int(i), members, center, scale, basis, s)


def project(core: Core, X):
    """Scores, orthogonal distances and whitened score distances for the rows of ``X``."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    Xt = (X - core.center) / core.scale
    z = Xt @ core.basis
    resid = Xt - z @ core.basis.T
    od = np.sqrt(np.einsum("ij,ij->i", resid, resid))
    if core.dim:
        sd = np.linalg.norm(z / core.singular_values, axis=1)
    else:
        sd = np.zeros(len(X))
    return z, od, sd


def project_point(core: Core, x):
    """Single-point version of :func:`project` returning ``(z, od, sd)``."""
    z, od, sd = project(core, np.asarray(x, dtype=float)[None, :])
    return z[0], float(od[0]), float(sd[0])


def local_space(X, core: Core) -> LocalSpace:
    return LocalSpace(*project(core, X))
