"""l1 minimisation engines.

* :func:`solve_bp` -- basis pursuit, ``min ||e||_1  s.t.  F e = b``.
* :func:`solve_lad` -- least absolute deviations, ``min_x ||y - A x||_1``.
* :func:`solve_weighted_lad` / :func:`solve_reweighted_l1` -- the reweighted
  l1 baseline built on weighted LAD.
* :func:`solve_bpdn` -- basis pursuit denoising,
  ``min ||e||_1  s.t.  ||F e - b||_2 <= sigma``.

The LP problems go through a primal-dual interior point kernel (see
:mod:`sitl1._kernels`), after which the point is snapped to the vertex on the
identified support when that stays feasible and certified.  BPDN uses a
log-barrier Newton method on its dual followed by a closed-form solve on the
identified support and sign pattern.

Every report carries a *certified* duality gap: the dual iterate is made
feasible before the dual objective is evaluated, so ``objective - dual`` is a
true upper bound on the suboptimality.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from . import _kernels
from .errors import DimensionMismatch, InfeasibleError, InvalidInput
from .linalg import as_matrix, as_vector, svd

__all__ = [
    "SolveReport",
    "SolverConfig",
    "Status",
    "solve_bp",
    "solve_bpdn",
    "solve_lad",
    "solve_reweighted_l1",
    "solve_weighted_lad",
]

# the kernel is run this much tighter than the requested tolerances so the
# recomputed (certified) quantities still clear them
_KERNEL_MARGIN = 0.1
_RANK_RTOL = 1e-9


class Status(str, enum.Enum):
    OPTIMAL = "Optimal"
    MAX_ITER = "MaxIter"
    INFEASIBLE = "Infeasible"
    DEGENERATE = "Degenerate"


@dataclass(frozen=True)
class SolverConfig:
    """Tolerances and iteration caps shared by all engines.

    ``bpdn_max_iter`` caps the Newton steps of :func:`solve_bpdn`; the
    interior point solvers use ``max_iter``.
    """

    feas_tol: float = 1e-8
    gap_tol: float = 1e-8
    max_iter: int = 200
    reweight_delta: float = 1e-3
    reweight_rounds: int = 4
    bpdn_max_iter: int = 500

    def __post_init__(self):
        for name in ("feas_tol", "gap_tol", "reweight_delta"):
            if not getattr(self, name) > 0:
                raise InvalidInput(f"{name} must be positive")
        if self.max_iter < 1 or self.reweight_rounds < 1 or self.bpdn_max_iter < 1:
            raise InvalidInput("iteration counts must be at least 1")


@dataclass
class SolveReport:
    """Outcome of one l1 solve.

    ``primal_residual`` is the constraint violation relative to
    ``max(1, ||rhs||_2)``; ``duality_gap`` is ``(objective - dual_bound)``
    relative to ``max(1, |objective|)``.  A report is ``OPTIMAL`` or
    ``DEGENERATE`` only when both are within tolerance; ``DEGENERATE`` means a
    second optimum exists and ``solution`` is one point of the optimal face.
    """

    solution: np.ndarray
    objective: float
    primal_residual: float
    duality_gap: float
    status: Status
    iterations: int = 0
    dual: np.ndarray | None = field(default=None, repr=False)

    @property
    def ok(self) -> bool:
        return self.status in (Status.OPTIMAL, Status.DEGENERATE)


def _status(pres, gap, cfg, degenerate):
    if pres <= cfg.feas_tol and gap <= cfg.gap_tol:
        return Status.DEGENERATE if degenerate else Status.OPTIMAL
    return Status.MAX_ITER


def _rank_deficient(m: np.ndarray) -> bool:
    """True when the columns of ``m`` are numerically dependent."""
    if m.shape[1] == 0:
        return False
    if m.shape[1] > m.shape[0]:
        return True
    s = np.linalg.svd(m, compute_uv=False)
    return bool(s[-1] <= _RANK_RTOL * max(s[0], 1e-300))


def _row_reduce(f, b, feas_tol):
    """Check ``b in range(f)`` and drop dependent rows of ``f``.

    Returns an equivalent full-row-rank system ``(f', b')``.
    """
    res = svd(f)
    k = res.rank
    uk = res.u[:, :k]
    bk = uk.T @ b
    miss = float(np.linalg.norm(b - uk @ bk))
    if miss > feas_tol * max(1.0, float(np.linalg.norm(b))):
        raise InfeasibleError(f"b is not in range(F): least-squares residual {miss:.3e}")
    if k == f.shape[0]:
        return f, b
    return res.singular_values[:k, None] * res.v[:, :k].T, bk


def solve_bp(f, b, cfg: SolverConfig | None = None) -> SolveReport:
    """Basis pursuit ``min ||e||_1 s.t. f @ e = b``.

    Solved as the LP ``min 1'(u + v)  s.t.  f (u - v) = b,  u, v >= 0``.

    Raises
    ------
    InfeasibleError
        If ``b`` is not in the range of ``f``.
    """
    cfg = cfg or SolverConfig()
    f = as_matrix(f, "F")
    b = as_vector(b, "b")
    m, n = f.shape
    if b.size != m:
        raise DimensionMismatch(f"F is {m}x{n} but b has {b.size} entries")
    fr, br = _row_reduce(f, b, cfg.feas_tol)

    M = np.hstack([fr, -fr])
    w, _, lam, s, iters, _ = _kernels.ipm(
        M, np.zeros((fr.shape[0], 0)), br, np.ones(2 * n),
        _KERNEL_MARGIN * cfg.feas_tol, _KERNEL_MARGIN * cfg.gap_tol, cfg.max_iter,
    )
    u, v = w[:n], w[n:]
    e = u - v
    bnorm = max(1.0, float(np.linalg.norm(b)))
    obj = float(np.abs(e).sum())
    pres = float(np.linalg.norm(f @ e - b)) / bnorm

    scale = float(np.max(np.abs(fr.T @ lam))) if lam.size else 0.0
    if scale > 1.0:
        lam = lam / scale
    dual = float(br @ lam)
    gap = (obj - dual) / max(1.0, abs(obj))

    support = np.maximum(u, v) > np.minimum(s[:n], s[n:])
    degenerate = _rank_deficient(f[:, support])
    if not degenerate and support.any():
        snapped = _bp_vertex(f, b, e, support, dual, cfg)
        if snapped is not None:
            e, obj, pres, gap = snapped
    return SolveReport(e, obj, pres, gap, _status(pres, gap, cfg, degenerate), iters, lam)


def _bp_vertex(f, b, e, support, dual, cfg):
    """Exact solution on the support the IPM identified.

    The IPM stops inside the feasible set, leaving off-support entries of
    size ~sqrt(gap).  Solving ``F_S e_S = b`` removes them; the point is kept
    only if it has the same signs, is feasible and is certified by ``dual``.
    Returns ``(e, objective, primal_residual, gap)`` or ``None``.
    """
    es = np.linalg.lstsq(f[:, support], b, rcond=None)[0]
    if not np.array_equal(np.sign(es), np.sign(e[support])):
        return None
    ev = np.zeros_like(e)
    ev[support] = es
    obj = float(np.abs(ev).sum())
    pres = float(np.linalg.norm(f @ ev - b)) / max(1.0, float(np.linalg.norm(b)))
    gap = (obj - dual) / max(1.0, abs(obj))
    if pres > cfg.feas_tol or gap > cfg.gap_tol:
        return None
    return ev, obj, pres, gap


def _lad_vertex(a, y, resid, weights):
    """Primal and dual of the vertex spanned by the ``r`` smallest residuals.

    ``x`` interpolates the basis rows exactly.  Rows off the basis take
    ``lam_i = weights_i sign(resid_i)`` and basis rows are solved from
    ``a' lam = 0``; ``lam`` is ``None`` unless that is dual feasible.  The IPM
    stops a little inside the polytope and its multipliers lose accuracy once
    weights span several orders of magnitude, so the vertex gives the tight
    certificate.
    """
    n, r = a.shape
    basis = np.argsort(np.abs(resid), kind="stable")[:r]
    off = np.ones(n, dtype=bool)
    off[basis] = False
    try:
        x = np.linalg.solve(a[basis], y[basis])
        sgn = np.sign(y - a @ x)
        lam = np.zeros(n)
        lam[off] = weights[off] * sgn[off]
        lam[basis] = np.linalg.solve(a[basis].T, -(a[off].T @ lam[off]))
    except np.linalg.LinAlgError:
        return None, None
    if not np.all(np.isfinite(x)):
        return None, None
    if not np.all(np.abs(lam[basis]) <= weights[basis] * (1.0 + 1e-12)):
        return x, None
    return x, np.clip(lam, -weights, weights)


def solve_weighted_lad(a, y, weights, cfg: SolverConfig | None = None) -> SolveReport:
    """``min_x sum_i weights_i |y_i - a_i x|`` via the LP
    ``min w'(u + v)  s.t.  a x + u - v = y,  u, v >= 0``.

    ``solution`` is ``x``.
    """
    cfg = cfg or SolverConfig()
    a = as_matrix(a, "A")
    y = as_vector(y, "y")
    weights = as_vector(weights, "weights")
    n, r = a.shape
    if y.size != n or weights.size != n:
        raise DimensionMismatch(f"A is {n}x{r}; y has {y.size}, weights {weights.size} entries")
    if np.any(weights <= 0):
        raise InvalidInput("weights must be positive")

    eye = np.eye(n)
    w, x, lam, s, iters, _ = _kernels.ipm(
        np.hstack([eye, -eye]), a, y, np.concatenate([weights, weights]),
        _KERNEL_MARGIN * cfg.feas_tol, _KERNEL_MARGIN * cfg.gap_tol, cfg.max_iter,
    )
    u, v = w[:n], w[n:]
    resid = y - a @ x
    obj = float(weights @ np.abs(resid))
    pres = float(np.linalg.norm(resid - (u - v))) / max(1.0, float(np.linalg.norm(y)))

    # dual feasible set: a' lam = 0, |lam_i| <= weights_i
    q, _ = np.linalg.qr(a)
    lam = lam - q @ (q.T @ lam)
    scale = float(np.max(np.abs(lam) / weights))
    if scale > 1.0:
        lam = lam / scale
    dual = float(y @ lam)
    vx, vlam = _lad_vertex(a, y, resid, weights)
    if vlam is not None and float(y @ vlam) > dual:
        lam, dual = vlam, float(y @ vlam)
    if vx is not None:
        vobj = float(weights @ np.abs(y - a @ vx))
        if vobj <= obj:
            # u, v are read off the vertex residual, so it is exactly feasible
            x, obj, pres = vx, vobj, 0.0
    gap = (obj - dual) / max(1.0, abs(obj))

    zero_rows = np.maximum(u, v) <= np.minimum(s[:n], s[n:])
    # x is pinned down by the rows with zero residual
    degenerate = _rank_deficient(a[zero_rows])
    return SolveReport(x, obj, pres, gap, _status(pres, gap, cfg, degenerate), iters, lam)


def solve_lad(a, y, cfg: SolverConfig | None = None) -> SolveReport:
    """Least absolute deviation fit ``min_x ||y - a x||_1``; ``solution`` is ``x``."""
    a = as_matrix(a, "A")
    return solve_weighted_lad(a, y, np.ones(a.shape[0]), cfg)


def solve_reweighted_l1(a, y, cfg: SolverConfig | None = None) -> SolveReport:
    """Iteratively reweighted LAD.

    Round 1 is plain LAD; each following round reweights residual ``i`` by
    ``1 / (|e_i| + reweight_delta)``.  Returns the last round's report.
    """
    cfg = cfg or SolverConfig()
    a = as_matrix(a, "A")
    y = as_vector(y, "y")
    weights = np.ones(a.shape[0])
    for _ in range(cfg.reweight_rounds):
        rep = solve_weighted_lad(a, y, weights, cfg)
        weights = 1.0 / (np.abs(y - a @ rep.solution) + cfg.reweight_delta)
    return rep


# --- basis pursuit denoising -------------------------------------------------


def _bpdn_dual_value(f, b, sigma, lam):
    scale = float(np.max(np.abs(f.T @ lam))) if lam.size else 0.0
    if scale > 1.0:
        lam = lam / scale
    return float(b @ lam - sigma * np.linalg.norm(lam)), lam


def _bpdn_barrier(f, b, sigma, tol, max_newton):
    """Log-barrier Newton method on the BPDN dual.

    Maximises ``b'lam - sigma ||lam||`` over ``|F' lam| < 1``.  ``f`` must have
    full row rank.  Returns ``(e, lam, newton_steps)`` where ``e`` is the primal
    point read off the central path.
    """
    m, n = f.shape
    g0 = float(np.max(np.abs(f.T @ b)))
    lam = 0.5 * b / g0
    phi = float(b @ lam - sigma * np.linalg.norm(lam))
    t = max(1.0, 2.0 * n / max(abs(phi), 1e-12))
    steps = 0
    best = None

    def change(lam_, g, step, gs, a, t_):
        # barrier increment along a step, written to avoid cancellation
        lo, hi = a * gs / (1.0 - g), a * gs / (1.0 + g)
        if np.any(lo >= 1.0) or np.any(hi <= -1.0):
            return np.inf
        nl = np.linalg.norm(lam_)
        dnorm = (2.0 * a * (lam_ @ step) + a * a * (step @ step)) / (
            np.linalg.norm(lam_ + a * step) + nl)
        return (-t_ * (a * (b @ step) - sigma * dnorm)
                - np.sum(np.log1p(-lo)) - np.sum(np.log1p(hi)))

    while True:
        stalled = True
        for _ in range(50):
            g = f.T @ lam
            ip, im = 1.0 / (1.0 - g), 1.0 / (1.0 + g)
            nl = float(np.linalg.norm(lam))
            grad = -t * b + f @ (ip - im)
            hess = (f * (ip**2 + im**2)) @ f.T
            if sigma > 0.0:
                grad += t * sigma * lam / nl
                hess += (t * sigma / nl) * (np.eye(m) - np.outer(lam, lam) / nl**2)
            try:
                step = -sla.solve(hess, grad, assume_a="pos", check_finite=False)
            except (np.linalg.LinAlgError, ValueError):
                step = -np.linalg.lstsq(hess, grad, rcond=None)[0]
            dec2 = -float(grad @ step)
            steps += 1
            if dec2 <= 1e-14 or steps >= max_newton:
                stalled = False
                break
            gs = f.T @ step
            with np.errstate(divide="ignore"):
                bound = np.min(np.where(gs > 0, (1.0 - g) / gs,
                                        np.where(gs < 0, (-1.0 - g) / gs, np.inf)))
            a = min(1.0, 0.99 * bound)
            while change(lam, g, step, gs, a, t) > -0.01 * a * dec2 and a > 1e-12:
                a *= 0.5
            if a <= 1e-12:
                break
            lam = lam + a * step
            if dec2 <= 1e-10:
                stalled = False
                break
        if stalled and best is not None:
            # precision exhausted at this barrier weight; keep the last centred point
            return best + (steps,)
        g = f.T @ lam
        e = (1.0 / (1.0 - g) - 1.0 / (1.0 + g)) / t
        best = (e, lam.copy())
        if 2.0 * n / t <= tol * max(1.0, float(np.abs(e).sum())) or steps >= max_newton:
            return e, lam, steps
        t *= 10.0


def _bpdn_polish(f, b, sigma, supp, z):
    """Exact solve of BPDN restricted to support ``supp`` with signs ``z``.

    Returns ``(e, lam)`` when the restricted solution keeps its signs and its
    dual certificate is feasible off the support (so it is globally optimal),
    otherwise ``None``.
    """
    fs = f[:, supp]
    if fs.shape[1] == 0 or fs.shape[1] > fs.shape[0] or _rank_deficient(fs):
        return None
    q, rr = np.linalg.qr(fs)
    bq = q.T @ b
    rho2 = sigma * sigma - float(np.sum((b - q @ bq) ** 2))
    slack = 1e-12 * max(1.0, float(b @ b))
    if rho2 < -slack:
        return None
    rho = np.sqrt(rho2) if rho2 > slack else 0.0
    rinv_t_z = sla.solve_triangular(rr, z, trans="T")
    nz = float(np.linalg.norm(rinv_t_z))
    g = -rho * rinv_t_z / nz if rho > 0 else np.zeros_like(bq)
    es = sla.solve_triangular(rr, bq + g)
    if not np.array_equal(np.sign(es), z):
        return None
    out = np.zeros(f.shape[1])
    out[supp] = es
    if rho > 0:
        lam = (nz / rho) * (b - fs @ es)
    else:
        lam = q @ rinv_t_z
    if float(np.max(np.abs(f.T @ lam))) > 1.0 + 1e-9:
        return None
    return out, lam


def _bpdn_project(f, b, sigma, supp, e, lam):
    """Move ``e`` on ``supp`` onto the point of the central-path residual.

    Used when the optimum is not unique and no closed form applies.  Returns
    the corrected point, or ``None`` if the signs change or the target is out
    of reach.
    """
    nl = float(np.linalg.norm(lam))
    target = b - sigma * lam / nl if sigma > 0 and nl > 0 else b
    fs = f[:, supp]
    es = e[supp]
    delta = np.linalg.lstsq(fs, target - fs @ es, rcond=None)[0]
    es = es + delta
    if not np.array_equal(np.sign(es), np.sign(e[supp])):
        return None
    out = np.zeros_like(e)
    out[supp] = es
    if np.linalg.norm(fs @ es - target) > 1e-10 * max(1.0, float(np.linalg.norm(b))):
        return None
    return out


def solve_bpdn(f, b, sigma: float, cfg: SolverConfig | None = None) -> SolveReport:
    """Basis pursuit denoising ``min ||e||_1 s.t. ||f e - b||_2 <= sigma``.

    A log-barrier Newton method on the dual problem
    ``max b'lam - sigma ||lam||_2  s.t.  ||f' lam||_inf <= 1`` locates the
    support; the problem restricted to that support and sign pattern is then
    solved in closed form and accepted when its dual certificate is feasible.
    At ``sigma = 0`` this is basis pursuit.

    Raises
    ------
    InfeasibleError
        If ``min_e ||f e - b||_2 > sigma``.
    """
    cfg = cfg or SolverConfig()
    f = as_matrix(f, "F")
    b = as_vector(b, "b")
    m, n = f.shape
    if b.size != m:
        raise DimensionMismatch(f"F is {m}x{n} but b has {b.size} entries")
    if not sigma >= 0:
        raise InvalidInput("sigma must be nonnegative")
    bnorm = float(np.linalg.norm(b))
    if sigma >= bnorm:
        return SolveReport(np.zeros(n), 0.0, 0.0, 0.0, Status.OPTIMAL, 0, np.zeros(m))

    # reduce to full row rank: ||F e - b||^2 = ||S V'e - U'b||^2 + floor^2
    res = svd(f)
    k = res.rank
    fr = res.singular_values[:k, None] * res.v[:, :k].T
    br = res.u[:, :k].T @ b
    floor = float(np.linalg.norm(b - res.u[:, :k] @ br))
    if floor > sigma + cfg.feas_tol * max(1.0, bnorm):
        raise InfeasibleError(f"residual floor {floor:.3e} exceeds sigma {sigma:.3e}")
    sig_r = float(np.sqrt(max(sigma * sigma - floor * floor, 0.0)))

    e, lam, steps = _bpdn_barrier(fr, br, sig_r, 0.1 * cfg.gap_tol, cfg.bpdn_max_iter)

    g = fr.T @ lam
    mag = np.abs(e)
    guesses = [np.abs(g) >= 1.0 - 1e-6, mag > 1e-6 * float(mag.max())]
    for supp in guesses:
        polished = _bpdn_polish(fr, br, sig_r, supp, np.sign(g[supp]))
        if polished is not None:
            e, lam = polished
            break
    else:
        projected = _bpdn_project(fr, br, sig_r, guesses[0], e, lam)
        if projected is not None:
            e = projected

    dual, lam = _bpdn_dual_value(fr, br, sig_r, lam)
    obj = float(np.abs(e).sum())
    excess = max(0.0, float(np.linalg.norm(f @ e - b)) - sigma)
    pres = excess / max(1.0, bnorm)
    gap = (obj - dual) / max(1.0, abs(obj))

    supp = np.abs(e) > 1e-9 * max(float(np.abs(e).max()), 1e-300)
    stacked = np.vstack([f[:, supp], np.sign(e[supp])[None, :]])
    degenerate = bool(np.any(supp)) and _rank_deficient(stacked)
    return SolveReport(e, obj, pres, gap, _status(pres, gap, cfg, degenerate), steps, lam)
