"""Randomised sparsity-invariant-transform search for sparse error detection.

Given ``y = A x + e`` with ``e`` sparse, split R^n into ``span(A)`` (basis
``u_r``), the direction ``u_next`` from ``span(A)`` towards ``y`` and the
complement ``u_comp``.  An orthogonal ``Phi`` that fixes ``u_comp`` and rotates
``u_next`` onto a unit vector ``a`` inside ``span([A, y])`` leaves the sparsest
error vectors unchanged up to scale, but changes which vector is l1-minimal.
Under such a ``Phi`` the l1 problem reduces to::

    min ||e||_1   s.t.   a'e = t,   u_comp' e = 0,        t = u_next' y

:func:`detect` draws many random ``a`` (plus ``a = u_next``, which is plain
LAD), solves each reduced problem, soft-thresholds, and keeps the sparsest.
"""
from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass, replace

import numpy as np

from .errors import (
    AllSamplesDegenerate,
    DegenerateSample,
    DegenerateY,
    DimensionMismatch,
    GramSchmidtBreakdown,
    InfeasibleInput,
    InvalidInput,
    RankDeficientComplement,
)
from .l1solve import SolverConfig, SolveReport, solve_bp, solve_bpdn
from .linalg import as_matrix, as_vector, numerical_rank, pseudo_inverse_apply, svd
from .problem import Problem

__all__ = [
    "CandidateA",
    "Detection",
    "OrthoFrame",
    "Problem",
    "SipReport",
    "build_frame",
    "build_phi",
    "candidate_rng",
    "converted_system",
    "detect",
    "detect_once",
    "direct_candidate",
    "draw_candidate",
    "phi_times_ft",
    "recover_underdetermined",
    "recover_x",
    "sample_candidate",
    "sample_detections",
    "select_best",
    "soft_threshold",
    "verify_sip",
]

# relative size below which u_next' e is treated as zero when rescaling
LAMBDA_CUTOFF = 1e-10
_DEGENERATE_Y_RTOL = 1e-10
_GS_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class OrthoFrame:
    """Orthonormal split of R^n: ``[u_r | u_next | u_comp]``, with ``t = u_next'y``."""

    u_r: np.ndarray
    u_next: np.ndarray
    u_comp: np.ndarray
    t: float

    @property
    def span_basis(self) -> np.ndarray:
        """``[u_r | u_next]``, an orthobasis of ``span([A, y])``."""
        return np.column_stack([self.u_r, self.u_next])


@dataclass(frozen=True, eq=False)
class CandidateA:
    """Unit vector in ``span([A, y])``; ``seed_index`` 0 is ``u_next`` itself."""

    a: np.ndarray
    seed_index: int


@dataclass(frozen=True, eq=False)
class Detection:
    """Result of one reduced l1 solve, mapped back to the original problem.

    ``lam`` is the factor taking the thresholded solution to original error
    magnitudes, ``e_scaled = lam * threshold(e_raw)``.
    """

    e_raw: np.ndarray
    e_scaled: np.ndarray
    support: tuple
    l0_count: int
    lam: float
    x_hat: np.ndarray
    candidate: CandidateA | None
    report: SolveReport | None


# --- frame and candidates ------------------------------------------------------


def build_frame(p: Problem) -> OrthoFrame:
    """Split R^n into ``span(A)``, the direction to ``y``, and the rest.

    Raises
    ------
    DegenerateY
        If ``y`` lies in ``span(A)``.
    """
    r = p.r
    u_r = svd(p.a).u[:, :r]
    resid = p.y - u_r @ (u_r.T @ p.y)
    rn = float(np.linalg.norm(resid))
    if rn <= _DEGENERATE_Y_RTOL * float(np.linalg.norm(p.y)) or rn == 0.0:
        raise DegenerateY("y lies in span(A); the zero error vector is optimal")
    u_next = resid / rn
    u_comp = svd(np.column_stack([u_r, u_next])).u[:, r + 1:]
    return OrthoFrame(u_r, u_next, u_comp, float(u_next @ p.y))


def candidate_rng(seed: int, index: int) -> np.random.Generator:
    """Random stream for sample ``index``; independent of how many samples run."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(index,)))


def draw_candidate(frame: OrthoFrame, rng: np.random.Generator, seed_index: int = 0) -> CandidateA:
    """Uniformly random unit vector in ``span([A, y])``."""
    basis = frame.span_basis
    while True:
        f = rng.standard_normal(basis.shape[1])
        nf = float(np.linalg.norm(f))
        if nf > 0.0:
            break
    # orthonormal basis times a unit vector: already unit to rounding
    return CandidateA(basis @ (f / nf), seed_index)


def direct_candidate(frame: OrthoFrame) -> CandidateA:
    """``a = u_next``: the reduced problem is then exactly LAD."""
    return CandidateA(frame.u_next.copy(), 0)


def sample_candidate(frame: OrthoFrame, seed: int, index: int) -> CandidateA:
    """Candidate number ``index`` of the stream for ``seed`` (0 is the direct one)."""
    if index == 0:
        return direct_candidate(frame)
    return draw_candidate(frame, candidate_rng(seed, index), index)


# --- one sample -----------------------------------------------------------------


def converted_system(frame: OrthoFrame, a=None):
    """Constraint system ``(F, b)`` of the reduced l1 problem for candidate ``a``.

    ``F = [a | u_comp]'`` and ``b = (t, 0, ..., 0)``; ``a`` defaults to ``u_next``.
    """
    a = frame.u_next if a is None else np.asarray(a, dtype=float)
    f = np.vstack([a[None, :], frame.u_comp.T])
    b = np.zeros(f.shape[0])
    b[0] = frame.t
    return f, b


def soft_threshold(e, eps: float) -> np.ndarray:
    e = np.asarray(e, dtype=float)
    # + 0.0 turns the -0.0 left by negative entries into plain zeros
    return np.sign(e) * np.maximum(np.abs(e) - eps, 0.0) + 0.0


def recover_x(p: Problem, support) -> np.ndarray:
    """Least-squares ``x`` from the rows outside ``support``.

    Raises
    ------
    RankDeficientComplement
        If those rows do not have rank ``r``.
    """
    keep = np.ones(p.n, dtype=bool)
    keep[list(support)] = False
    rows = p.a[keep]
    if rows.shape[0] < p.r or numerical_rank(rows) < p.r:
        raise RankDeficientComplement(
            f"{rows.shape[0]} rows outside the support do not determine x")
    return np.linalg.lstsq(rows, p.y[keep], rcond=None)[0]


def detect_once(
    p: Problem,
    frame: OrthoFrame,
    cand: CandidateA,
    eps: float,
    solver: SolverConfig | None = None,
    sigma: float = 0.0,
) -> Detection:
    """Solve the reduced problem for one candidate and map it back.

    Raises
    ------
    DegenerateSample
        If the thresholded solution has no component along ``u_next``, so
        it cannot be rescaled.
    """
    if not eps >= 0:
        raise InvalidInput("eps must be nonnegative")
    f, b = converted_system(frame, cand.a)
    if sigma > 0:
        rep = solve_bpdn(f, b, sigma, solver)
    else:
        rep = solve_bp(f, b, solver)
    e_raw = rep.solution
    e_thr = soft_threshold(e_raw, eps)
    along = float(frame.u_next @ e_thr)
    if not np.any(e_thr) or abs(along) <= LAMBDA_CUTOFF * float(np.linalg.norm(e_thr)):
        raise DegenerateSample(f"sample {cand.seed_index}: cannot rescale")
    lam = frame.t / along
    e_scaled = lam * e_thr + 0.0
    support = tuple(int(i) for i in np.flatnonzero(e_thr))
    try:
        x_hat = recover_x(p, support)
    except RankDeficientComplement:
        x_hat = pseudo_inverse_apply(p.a, p.y - e_scaled)
    return Detection(e_raw, e_scaled, support, len(support), lam, x_hat, cand, rep)


# --- the search -----------------------------------------------------------------


def _zero_detection(p: Problem) -> Detection:
    x = pseudo_inverse_apply(p.a, p.y)
    z = np.zeros(p.n)
    return Detection(z, z.copy(), (), 0, 0.0, x, None, None)


def sample_detections(
    p: Problem,
    snbr: int,
    eps: float,
    seed: int,
    solver: SolverConfig | None = None,
    sigma: float = 0.0,
    frame: OrthoFrame | None = None,
) -> list:
    """Detections for samples ``0..snbr`` (``None`` where a sample was degenerate).

    Sample 0 is the direct candidate; sample ``i`` depends only on
    ``(seed, i)``, so a run with a larger ``snbr`` extends a smaller one.
    """
    if snbr < 1:
        raise InvalidInput("snbr must be at least 1")
    frame = frame or build_frame(p)
    out = []
    for i in range(snbr + 1):
        cand = sample_candidate(frame, seed, i)
        try:
            out.append(detect_once(p, frame, cand, eps, solver, sigma))
        except DegenerateSample:
            out.append(None)
    return out


def _rank_key(d: Detection):
    return (d.l0_count, float(np.abs(d.e_raw).sum()), d.candidate.seed_index)


def select_best(detections: Sequence) -> Detection:
    """Sparsest detection; ties go to smaller ``||e_raw||_1``, then earlier sample.

    Samples whose solver report is not certified count as degenerate.  The
    choice depends only on the samples, so for a fixed seed the selected
    ``l0_count`` can only shrink as more samples are added.

    Raises
    ------
    AllSamplesDegenerate
        If no usable sample remains.
    """
    valid = [d for d in detections if d is not None and (d.report is None or d.report.ok)]
    if not valid:
        raise AllSamplesDegenerate("every sample was degenerate or failed to converge")
    return min(valid, key=_rank_key)


def detect(
    p: Problem,
    snbr: int,
    eps: float,
    seed: int,
    solver: SolverConfig | None = None,
    sigma: float = 0.0,
) -> Detection:
    """Monte Carlo search over ``snbr`` random candidates plus the direct one.

    Returns the sparsest detection.  If ``y`` already lies in ``span(A)`` the
    zero error vector is returned without sampling.
    """
    try:
        frame = build_frame(p)
    except DegenerateY:
        return _zero_detection(p)
    return select_best(sample_detections(p, snbr, eps, seed, solver, sigma, frame))


# --- explicit transforms --------------------------------------------------------


def build_phi(frame: OrthoFrame, cand: CandidateA) -> np.ndarray:
    """Orthogonal ``Phi`` with ``Phi u_next = a`` that fixes ``u_comp``.

    ``Phi = W2 W' + u_comp u_comp'`` where ``W = [u_next | u_r]`` and ``W2``
    is the Gram-Schmidt completion of ``a`` by the columns of ``u_r`` (then
    ``u_next``), so ``a = u_next`` gives the identity.

    Raises
    ------
    GramSchmidtBreakdown
        If the completion does not reach full dimension.
    """
    w = np.column_stack([frame.u_next, frame.u_r])
    k = w.shape[1]
    basis = []
    for v in [cand.a, *frame.u_r.T, frame.u_next]:
        q = np.array(v, dtype=float)
        for _ in range(2):
            for b in basis:
                q -= (b @ q) * b
        nq = float(np.linalg.norm(q))
        if nq > _GS_TOL:
            basis.append(q / nq)
        if len(basis) == k:
            break
    if len(basis) < k:
        raise GramSchmidtBreakdown(f"completion reached {len(basis)} of {k} directions")
    w2 = np.column_stack(basis)
    return w2 @ w.T + frame.u_comp @ frame.u_comp.T


def phi_times_ft(frame: OrthoFrame, cand: CandidateA, f) -> np.ndarray:
    """``Phi F'`` without forming ``Phi``, for ``F`` with rows orthogonal to ``span(A)``.

    Such rows lie in ``span(u_next, u_comp)``; ``Phi`` fixes ``u_comp`` and
    sends ``u_next`` to ``a``, so ``Phi F' = F' + (a - u_next)(F u_next)'``.
    """
    f = as_matrix(f, "F")
    n = frame.u_next.size
    if f.shape[1] != n:
        raise DimensionMismatch(f"F has {f.shape[1]} columns, expected {n}")
    leak = float(np.abs(f @ frame.u_r).max()) if frame.u_r.size else 0.0
    if leak > 1e-8 * max(1.0, float(np.abs(f).max())):
        raise InvalidInput("rows of F must be orthogonal to span(A)")
    return f.T + np.outer(cand.a - frame.u_next, f @ frame.u_next)


# --- under-determined recovery --------------------------------------------------


def recover_underdetermined(
    f,
    y_tilde,
    snbr: int,
    eps: float,
    seed: int,
    solver: SolverConfig | None = None,
    sigma: float = 0.0,
) -> Detection:
    """Sparsest ``e`` with ``f e = y_tilde`` for wide, full-row-rank ``f``.

    Rewritten as error detection: ``y = f^+ y_tilde`` and ``A`` an orthobasis
    of ``kernel(f)``, so that ``y - A x`` ranges over all solutions.  The
    returned ``e_scaled`` is the debiased error ``y - A x_hat`` on the
    detected support.

    Raises
    ------
    InfeasibleInput
        If ``y_tilde`` is not in ``range(f)``.
    """
    f = as_matrix(f, "F")
    y_tilde = as_vector(y_tilde, "y_tilde")
    m, n = f.shape
    if y_tilde.size != m:
        raise DimensionMismatch(f"F is {m}x{n} but y_tilde has {y_tilde.size} entries")
    res = svd(f)
    if not m < n or res.rank < m:
        raise InvalidInput("F must be wide with full row rank")
    y = pseudo_inverse_apply(f, y_tilde)
    if np.linalg.norm(f @ y - y_tilde) > 1e-9 * max(1.0, float(np.linalg.norm(y_tilde))):
        raise InfeasibleInput("y_tilde is not in range(F)")
    p = Problem(res.v[:, m:], y)
    det = detect(p, snbr, eps, seed, solver, sigma)
    e = y - p.a @ det.x_hat
    mask = np.zeros(n, dtype=bool)
    mask[list(det.support)] = True
    e[~mask] = 0.0
    return replace(det, e_scaled=e)


# --- invariance check -----------------------------------------------------------


@dataclass(frozen=True)
class SipReport:
    """Outcome of :func:`verify_sip`."""

    in_family: bool
    min_l0_before: int
    min_l0_after: int
    supports_before: tuple
    supports_after: tuple

    @property
    def counts_equal(self) -> bool:
        return self.min_l0_before == self.min_l0_after

    @property
    def supports_equal(self) -> bool:
        return self.supports_before == self.supports_after

    @property
    def passed(self) -> bool:
        return self.in_family and self.counts_equal and self.supports_equal


def verify_sip(phi, p: Problem, cap: int | None = None, tol: float = 1e-8) -> SipReport:
    """Check that ``phi`` keeps the sparsest error vectors of ``p``.

    ``phi`` must be invertible and fix ``span([A, y])^perp`` pointwise (within
    ``tol``); the exact l0 oracle is then run before and after transforming.

    Raises
    ------
    EnumerationTooLarge
        If the oracle would exceed ``cap`` subsets.
    """
    from . import oracle

    phi = as_matrix(phi, "Phi")
    if phi.shape != (p.n, p.n):
        raise DimensionMismatch(f"Phi must be {p.n}x{p.n}")
    try:
        comp = build_frame(p).u_comp
    except DegenerateY:
        comp = svd(np.column_stack([p.a, p.y])).u[:, p.r:]
    fixes = comp.size == 0 or float(np.abs(phi @ comp - comp).max()) <= tol
    s = np.linalg.svd(phi, compute_uv=False)
    invertible = bool(s[-1] > tol * s[0])
    cap = oracle.DEFAULT_CAP if cap is None else cap
    before = oracle.l0_oracle(p, cap)
    after = oracle.l0_oracle(p.transformed(phi), cap)
    return SipReport(
        bool(fixes and invertible),
        before.min_l0,
        after.min_l0,
        before.supports,
        after.supports,
    )
