"""Dense linear algebra helpers: SVD, orthobases, projections, pseudo-inverse.

All routines take and return plain :class:`numpy.ndarray` objects.  Inputs are
validated for finiteness once, at the boundary, by :func:`as_matrix` and
:func:`as_vector`.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, FullRank, InvalidInput, SolverFailure

__all__ = [
    "SvdResult",
    "as_matrix",
    "as_vector",
    "numerical_rank",
    "orthobasis_complement",
    "orthobasis_range",
    "pseudo_inverse_apply",
    "svd",
]

EPS = np.finfo(float).eps


def as_matrix(m, name="matrix"):
    """Return ``m`` as a finite 2-D float array (a column vector is promoted)."""
    arr = np.asarray(m, dtype=float)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise InvalidInput(f"{name} must be a non-empty 2-D array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidInput(f"{name} has non-finite entries")
    return arr


def as_vector(v, name="vector"):
    arr = np.asarray(v, dtype=float)
    if arr.ndim == 2 and 1 in arr.shape:
        arr = arr.ravel()
    if arr.ndim != 1 or arr.size < 1:
        raise InvalidInput(f"{name} must be a non-empty 1-D array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidInput(f"{name} has non-finite entries")
    return arr


@dataclass(frozen=True)
class SvdResult:
    """Full singular value decomposition ``m = u @ diag(s) @ v.T``.

    ``u`` is ``rows x rows`` and ``v`` is ``cols x cols``; ``singular_values``
    holds ``min(rows, cols)`` nonincreasing entries.
    """

    u: np.ndarray
    singular_values: np.ndarray
    v: np.ndarray

    @property
    def rank_tol(self) -> float:
        return rank_tolerance(self.u.shape[0], self.v.shape[0], self.singular_values)

    @property
    def rank(self) -> int:
        return int(np.count_nonzero(self.singular_values > self.rank_tol))

    def reconstruct(self) -> np.ndarray:
        k = self.singular_values.size
        return (self.u[:, :k] * self.singular_values) @ self.v[:, :k].T


def rank_tolerance(rows, cols, singular_values) -> float:
    smax = float(singular_values[0]) if len(singular_values) else 0.0
    return max(rows, cols) * EPS * smax


def svd(m) -> SvdResult:
    m = as_matrix(m)
    try:
        u, s, vt = np.linalg.svd(m, full_matrices=True)
    except np.linalg.LinAlgError as exc:
        raise SolverFailure(f"SVD did not converge: {exc}") from exc
    return SvdResult(u=u, singular_values=s, v=vt.T)


def numerical_rank(m) -> int:
    return svd(m).rank


def orthobasis_range(m) -> np.ndarray:
    """Orthonormal columns spanning ``range(m)``; as many as its numerical rank."""
    res = svd(m)
    if res.rank == 0:
        raise InvalidInput("range of a zero matrix has no basis")
    return res.u[:, : res.rank].copy()


def orthobasis_complement(m) -> np.ndarray:
    """Orthonormal columns spanning ``range(m)``'s orthogonal complement."""
    res = svd(m)
    rows = res.u.shape[0]
    if res.rank >= rows:
        raise FullRank(f"range of a {rows}x{res.v.shape[0]} matrix is all of R^{rows}")
    return res.u[:, res.rank :].copy()


def pseudo_inverse_apply(m, b) -> np.ndarray:
    """Minimum-norm least-squares solution of ``m @ x = b``."""
    m = as_matrix(m)
    b = as_vector(b, "b")
    if b.size != m.shape[0]:
        raise DimensionMismatch(f"b has {b.size} entries, matrix has {m.shape[0]} rows")
    res = svd(m)
    k = res.rank
    if k == 0:
        return np.zeros(m.shape[1])
    coef = (res.u[:, :k].T @ b) / res.singular_values[:k]
    return res.v[:, :k] @ coef
