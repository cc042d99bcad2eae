"""Reference (numpy) implementations of the hot kernels.

These mirror ``_core.pyx`` operation for operation so the two backends agree to
rounding error.  They are used when the compiled module is unavailable or when
``SITL1_BACKEND=python`` is set.
"""
from itertools import combinations

import numpy as np
import scipy.linalg as sla

CONVERGED = 0
MAX_ITER = 1
NUMERICAL = 2

_STEP_ETA = 0.995
# refinement passes against the unregularised normal matrix
_REFINE = 2


def _chol(K):
    """Cholesky factor of ``K`` with escalating diagonal regularisation."""
    scale = max(float(np.max(np.abs(np.diag(K)))), 1e-300)
    reg = 1e-14 * scale
    for _ in range(8):
        try:
            return sla.cho_factor(K + reg * np.eye(K.shape[0]), lower=True, check_finite=False)
        except np.linalg.LinAlgError:
            reg *= 100.0
    return None


def _max_step(v, dv):
    neg = dv < 0
    if not np.any(neg):
        return 1.0
    return min(1.0, float(np.min(-v[neg] / dv[neg])))


def ipm(M, N, b, c, feas_tol, gap_tol, max_iter):
    """Primal-dual interior point for ``min c@w  s.t.  M@w + N@x = b,  w >= 0``.

    ``x`` is a free variable block (``N`` may have zero columns).  Returns
    ``(w, x, lam, s, iterations, code)`` where ``lam``/``s`` are the dual
    multipliers and slacks and ``code`` is one of ``CONVERGED``, ``MAX_ITER``,
    ``NUMERICAL``.
    """
    M = np.ascontiguousarray(M, dtype=float)
    N = np.ascontiguousarray(N, dtype=float)
    b = np.ascontiguousarray(b, dtype=float)
    c = np.ascontiguousarray(c, dtype=float)
    m, nw = M.shape
    nx = N.shape[1]

    bnorm = float(np.linalg.norm(b))
    cnorm = float(np.linalg.norm(c))
    w = np.full(nw, max(1.0, float(np.max(np.abs(b))) if m else 1.0))
    s = np.full(nw, max(1.0, float(np.max(np.abs(c))) if nw else 1.0))
    lam = np.zeros(m)
    x = np.zeros(nx)

    code = MAX_ITER
    it = 0
    for it in range(max_iter + 1):
        rp = b - M @ w - N @ x
        rd = c - M.T @ lam - s
        rx = -(N.T @ lam)
        pobj = float(c @ w)
        pres = float(np.linalg.norm(rp)) / (1.0 + bnorm)
        dres = float(np.sqrt(rd @ rd + rx @ rx)) / (1.0 + cnorm)
        # complementarity gap; the objective difference also carries the
        # residuals times the multipliers and stalls when weights are large
        gap = float(w @ s) / (1.0 + abs(pobj))
        if pres <= feas_tol and dres <= feas_tol and gap <= gap_tol:
            code = CONVERGED
            break
        if it == max_iter:
            break
        mu = float(w @ s) / nw

        d = w / s
        K = (M * d) @ M.T
        Kf = _chol(K)
        if Kf is None:
            code = NUMERICAL
            break
        if nx:
            KiN = sla.cho_solve(Kf, N, check_finite=False)
            Sf = _chol(N.T @ KiN)
            if Sf is None:
                code = NUMERICAL
                break

        def direction(rc):
            r1 = rp - M @ ((rc - w * rd) / s)
            z = sla.cho_solve(Kf, r1, check_finite=False)
            # the regularisation is relative to the largest diagonal entry and
            # gets large in absolute terms once w/s spans many magnitudes; with
            # free variables z must match the unrefined K^{-1} N, so skip it
            for _ in range(0 if nx else _REFINE):
                z = z + sla.cho_solve(Kf, r1 - K @ z, check_finite=False)
            if nx:
                dx = sla.cho_solve(Sf, N.T @ z - rx, check_finite=False)
                dlam = z - KiN @ dx
            else:
                dx = np.zeros(0)
                dlam = z
            ds = rd - M.T @ dlam
            dw = (rc - w * ds) / s
            return dw, dx, dlam, ds

        dw_a, _, _, ds_a = direction(-w * s)
        ap = _max_step(w, dw_a)
        ad = _max_step(s, ds_a)
        mu_aff = float((w + ap * dw_a) @ (s + ad * ds_a)) / nw
        sigma = (mu_aff / mu) ** 3

        dw, dx, dlam, ds = direction(sigma * mu - w * s - dw_a * ds_a)
        if not np.isfinite(dw.sum() + ds.sum() + dlam.sum() + dx.sum()):
            code = NUMERICAL
            break
        ap = min(1.0, _STEP_ETA * _max_step(w, dw))
        ad = min(1.0, _STEP_ETA * _max_step(s, ds))
        w = w + ap * dw
        x = x + ap * dx
        lam = lam + ad * dlam
        s = s + ad * ds

    return w, x, lam, s, it, code


def subset_l0_counts(A, y, ztol, pivot_tol):
    """l0 count of ``y - A x_S`` for every size-``r`` row subset ``S``.

    Subsets are visited in :func:`itertools.combinations` order.  ``x_S`` solves
    ``A[S] x = y[S]``; subsets whose square block is numerically singular
    (smallest/largest singular value below ``pivot_tol``) get count ``-1``.
    """
    A = np.asarray(A, dtype=float)
    y = np.asarray(y, dtype=float)
    n, r = A.shape
    out = []
    it = combinations(range(n), r)
    while True:
        chunk = np.array([s for _, s in zip(range(65536), it)], dtype=np.intp)
        if chunk.size == 0:
            break
        blocks = A[chunk]
        sv = np.linalg.svd(blocks, compute_uv=False)
        ok = sv[:, -1] > pivot_tol * sv[:, 0]
        counts = np.full(chunk.shape[0], -1, dtype=np.int32)
        if np.any(ok):
            xs = np.linalg.solve(blocks[ok], y[chunk[ok]][..., None])[..., 0]
            resid = y[None, :] - xs @ A.T
            counts[ok] = np.count_nonzero(np.abs(resid) > ztol, axis=1)
        out.append(counts)
    return np.concatenate(out) if out else np.zeros(0, dtype=np.int32)
