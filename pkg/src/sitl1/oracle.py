"""Exact l0 ground truth at small scale.

A sparsest error vector of ``y = A x + e`` (A of rank r) vanishes on at least
``r`` rows whose block of ``A`` is invertible, so enumerating every size-``r``
row subset ``S``, solving ``A[S] x = y[S]`` and counting the nonzeros of
``y - A x`` finds all of them.  :func:`support_oracle` is a second,
independent brute force over error supports used to cross-check.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from itertools import combinations
from math import comb

import numpy as np

from . import _kernels
from .errors import EnumerationTooLarge
from .problem import Problem

__all__ = [
    "DEFAULT_CAP",
    "Certificate",
    "OracleResult",
    "OracleSolution",
    "Verdict",
    "certify",
    "extreme_point_check",
    "is_extreme_point",
    "l0_oracle",
    "subset_residuals",
    "support_oracle",
    "zero_tol",
]

DEFAULT_CAP = 2_000_000
_PIVOT_TOL = 1e-10


def zero_tol(y) -> float:
    """Magnitude below which a residual entry counts as zero."""
    return 1e-7 * max(1.0, float(np.max(np.abs(y))))


@dataclass(frozen=True, eq=False)
class OracleSolution:
    x: np.ndarray
    e: np.ndarray
    support: tuple


@dataclass(frozen=True)
class OracleResult:
    """All sparsest error vectors, one per distinct support, sorted by support.

    ``enumerated`` counts the subsets that produced a candidate.
    """

    min_l0: int
    solutions: list = field(compare=False)
    enumerated: int

    @property
    def supports(self) -> tuple:
        return tuple(s.support for s in self.solutions)


def _check_cap(n, r, cap):
    total = comb(n, r)
    if total > cap:
        raise EnumerationTooLarge(f"C({n},{r}) = {total} subsets exceeds cap {cap}")
    return total


def _solution(p, rows, ztol):
    x = np.linalg.solve(p.a[list(rows)], p.y[list(rows)])
    e = p.y - p.a @ x
    support = tuple(int(i) for i in np.flatnonzero(np.abs(e) > ztol))
    e[np.abs(e) <= ztol] = 0.0
    return OracleSolution(x, e, support)


def l0_oracle(p: Problem, cap: int = DEFAULT_CAP, ztol: float | None = None) -> OracleResult:
    """Enumerate every size-r row subset and keep the sparsest residuals.

    Raises
    ------
    EnumerationTooLarge
        If ``C(n, r) > cap``.
    """
    _check_cap(p.n, p.r, cap)
    ztol = zero_tol(p.y) if ztol is None else ztol
    counts = np.asarray(_kernels.subset_l0_counts(p.a, p.y, ztol, _PIVOT_TOL))
    valid = counts >= 0
    best = int(counts[valid].min())
    wanted = set(np.flatnonzero(counts == best).tolist())
    last = max(wanted)
    found = {}
    for idx, rows in enumerate(combinations(range(p.n), p.r)):
        if idx in wanted:
            sol = _solution(p, rows, ztol)
            found.setdefault(sol.support, sol)
        if idx == last:
            break
    solutions = [found[s] for s in sorted(found)]
    return OracleResult(best, solutions, int(valid.sum()))


def support_oracle(p: Problem, max_size: int | None = None, ztol: float | None = None) -> OracleResult:
    """Brute force over error supports of increasing size.

    ``S`` is feasible when ``y`` restricted to the rows outside ``S`` lies in
    the range of ``A`` restricted to those rows.  ``enumerated`` counts the
    supports tested.
    """
    n, r = p.n, p.r
    ztol = zero_tol(p.y) if ztol is None else ztol
    max_size = n - r if max_size is None else max_size
    tested = 0
    for k in range(max_size + 1):
        found = []
        for supp in combinations(range(n), k):
            tested += 1
            keep = np.ones(n, dtype=bool)
            keep[list(supp)] = False
            x = np.linalg.lstsq(p.a[keep], p.y[keep], rcond=None)[0]
            e = p.y - p.a @ x
            if np.all(np.abs(e[keep]) <= ztol) and np.all(np.abs(e[list(supp)]) > ztol):
                e[keep] = 0.0
                found.append(OracleSolution(x, e, supp))
        if found:
            return OracleResult(k, found, tested)
    raise EnumerationTooLarge(f"no error support of size <= {max_size}")


def subset_residuals(p: Problem, cap: int = DEFAULT_CAP) -> np.ndarray:
    """Residual ``y - A x_S`` of every invertible size-r row subset, one per row."""
    _check_cap(p.n, p.r, cap)
    out = []
    for rows in combinations(range(p.n), p.r):
        blk = p.a[list(rows)]
        s = np.linalg.svd(blk, compute_uv=False)
        if s[-1] > _PIVOT_TOL * s[0]:
            out.append(p.y - p.a @ np.linalg.solve(blk, p.y[list(rows)]))
    return np.array(out).reshape(-1, p.n)


# --- certification --------------------------------------------------------------


class Verdict(str, enum.Enum):
    EXACT = "Exact"
    SUBOPTIMAL = "SuboptimalBy"
    TOO_LARGE = "OracleTooLarge"


@dataclass(frozen=True)
class Certificate:
    """``excess`` is ``l0_count - min_l0`` (``None`` when the oracle was skipped)."""

    verdict: Verdict
    excess: int | None = None

    def __str__(self):
        if self.verdict is Verdict.SUBOPTIMAL:
            return f"SuboptimalBy({self.excess})"
        return self.verdict.value


def certify(p: Problem, det, cap: int = DEFAULT_CAP) -> Certificate:
    """Compare a detection (anything with ``support`` and ``l0_count``) with the oracle."""
    try:
        res = l0_oracle(p, cap)
    except EnumerationTooLarge:
        return Certificate(Verdict.TOO_LARGE)
    support = tuple(sorted(int(i) for i in det.support))
    if det.l0_count == res.min_l0 and support in res.supports:
        return Certificate(Verdict.EXACT, 0)
    return Certificate(Verdict.SUBOPTIMAL, int(det.l0_count - res.min_l0))


# --- extreme points -------------------------------------------------------------


def is_extreme_point(target, candidates, tol: float = 1e-9) -> bool:
    """False if ``target`` is a strict convex combination of two other candidates.

    All vectors are normalised to unit l1 norm first; zero vectors and copies
    of ``target`` are ignored.
    """
    t = np.asarray(target, dtype=float)
    t = t / np.abs(t).sum()
    cs = [c / np.abs(c).sum() for c in np.asarray(candidates, dtype=float) if np.any(c)]
    cs = [c for c in cs if np.abs(c - t).max() > tol]
    for i in range(len(cs)):
        for j in range(i + 1, len(cs)):
            d = cs[i] - cs[j]
            dd = float(d @ d)
            if dd <= tol * tol:
                continue
            theta = float((t - cs[j]) @ d) / dd
            if tol < theta < 1.0 - tol and np.abs(cs[j] + theta * d - t).max() <= tol:
                return False
    return True


def extreme_point_check(p: Problem, cap: int = DEFAULT_CAP, tol: float = 1e-9) -> bool:
    """Every sparsest error vector is an extreme point among the subset residuals."""
    res = l0_oracle(p, cap)
    cands = subset_residuals(p, cap)
    return all(is_extreme_point(s.e, cands, tol) for s in res.solutions if s.support)
