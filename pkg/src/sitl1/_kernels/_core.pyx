# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot kernels.

Same algorithms as ``_pure.py``; BLAS/LAPACK are reached through scipy's Cython
bindings so that the per-iteration work of small dense problems carries no
interpreter overhead.  Matrices are handled in column-major form: a C-ordered
``m x k`` buffer is read as the column-major ``k x m`` transpose.
"""
import numpy as np

from libc.math cimport fabs, isfinite, sqrt
from scipy.linalg.cython_blas cimport dgemv, dsymv, dsyrk, dgemm, ddot, dnrm2
from scipy.linalg.cython_lapack cimport dpotrf, dpotrs

cdef double STEP_ETA = 0.995
# refinement passes against the unregularised normal matrix
cdef int REFINE = 2

cdef enum:
    C_CONVERGED = 0
    C_MAX_ITER = 1
    C_NUMERICAL = 2

CONVERGED = C_CONVERGED
MAX_ITER = C_MAX_ITER
NUMERICAL = C_NUMERICAL


cdef double _max_step(double[::1] v, double[::1] dv) noexcept nogil:
    cdef Py_ssize_t j
    cdef double a = 1.0, t
    for j in range(v.shape[0]):
        if dv[j] < 0:
            t = -v[j] / dv[j]
            if t < a:
                a = t
    return a


cdef int _chol(double[::1, :] K, double[::1, :] work) noexcept nogil:
    """Factor ``K`` in place (lower) with escalating regularisation.

    ``work`` holds the unfactored matrix on entry and is left untouched.
    Returns 0 on success.
    """
    cdef int n = <int>K.shape[0]
    cdef int info = 0, attempt
    cdef Py_ssize_t i, j
    cdef double scale = 1e-300, reg
    cdef char uplo = b'L'
    for i in range(n):
        if fabs(work[i, i]) > scale:
            scale = fabs(work[i, i])
    reg = 1e-14 * scale
    for attempt in range(8):
        for j in range(n):
            for i in range(n):
                K[i, j] = work[i, j]
            K[j, j] += reg
        dpotrf(&uplo, &n, &K[0, 0], &n, &info)
        if info == 0:
            return 0
        reg *= 100.0
    return 1


def ipm(M_in, N_in, b_in, c_in, double feas_tol, double gap_tol, int max_iter):
    """Primal-dual interior point for ``min c@w  s.t.  M@w + N@x = b,  w >= 0``.

    Returns ``(w, x, lam, s, iterations, code)``; see ``_pure.ipm``.
    """
    cdef double[:, ::1] M = np.require(M_in, np.float64, ['C', 'W'])
    cdef double[:, ::1] Nrow = np.require(N_in, np.float64, ['C', 'W'])
    cdef double[::1] b = np.require(b_in, np.float64, ['C', 'W'])
    cdef double[::1] c = np.require(c_in, np.float64, ['C', 'W'])
    cdef int m = <int>M.shape[0]
    cdef int nw = <int>M.shape[1]
    cdef int nx = <int>Nrow.shape[1]
    cdef int one = 1, info = 0
    cdef double d_one = 1.0, d_zero = 0.0, d_mone = -1.0
    cdef char tr_n = b'N', tr_t = b'T', uplo = b'L'

    # column-major copies: Ncol is m x nx
    cdef double[::1, :] Ncol = np.require(np.asarray(N_in, dtype=np.float64).reshape(m, nx), np.float64, ['F', 'W'])
    cdef double[::1, :] B = np.empty((nw, m), order="F")
    cdef double[::1, :] K = np.empty((m, m), order="F")
    cdef double[::1, :] Kraw = np.empty((m, m), order="F")
    cdef double[::1, :] Z = np.empty((m, max(nx, 1)), order="F")
    cdef double[::1, :] S = np.empty((max(nx, 1), max(nx, 1)), order="F")
    cdef double[::1, :] Sraw = np.empty((max(nx, 1), max(nx, 1)), order="F")

    cdef double[::1] w = np.empty(nw)
    cdef double[::1] s = np.empty(nw)
    cdef double[::1] lam = np.zeros(m)
    cdef double[::1] x = np.zeros(max(nx, 1))
    cdef double[::1] rp = np.empty(m)
    cdef double[::1] rd = np.empty(nw)
    cdef double[::1] rx = np.zeros(max(nx, 1))
    cdef double[::1] rc = np.empty(nw)
    cdef double[::1] tmp = np.empty(nw)
    cdef double[::1] r1 = np.empty(m)
    cdef double[::1] r1_rhs = np.empty(m)
    cdef double[::1] r1_res = np.empty(m)
    cdef double[::1] tx = np.empty(max(nx, 1))
    cdef double[::1] dw = np.empty(nw)
    cdef double[::1] ds = np.empty(nw)
    cdef double[::1] dlam = np.empty(m)
    cdef double[::1] dx = np.zeros(max(nx, 1))
    cdef double[::1] dw_a = np.empty(nw)
    cdef double[::1] ds_a = np.empty(nw)

    cdef Py_ssize_t i, j
    cdef int it = 0, code = C_MAX_ITER, phase, ref
    cdef double bmax = 0.0, cmax = 0.0, bnorm, cnorm, pobj, pres, dres, gap
    cdef double mu, mu_aff, ap, ad, acc
    cdef double sigma = 0.0

    for i in range(m):
        if fabs(b[i]) > bmax:
            bmax = fabs(b[i])
    for j in range(nw):
        if fabs(c[j]) > cmax:
            cmax = fabs(c[j])
    bnorm = dnrm2(&m, &b[0], &one) if m > 0 else 0.0
    cnorm = dnrm2(&nw, &c[0], &one) if nw > 0 else 0.0
    for j in range(nw):
        w[j] = bmax if bmax > 1.0 else 1.0
        s[j] = cmax if cmax > 1.0 else 1.0

    with nogil:
        it = 0
        while True:
            # residuals: rp = b - M w - N x
            for i in range(m):
                rp[i] = b[i]
            dgemv(&tr_t, &nw, &m, &d_mone, &M[0, 0], &nw, &w[0], &one, &d_one, &rp[0], &one)
            if nx > 0:
                dgemv(&tr_n, &m, &nx, &d_mone, &Ncol[0, 0], &m, &x[0], &one, &d_one, &rp[0], &one)
            # rd = c - M^T lam - s
            for j in range(nw):
                rd[j] = c[j] - s[j]
            dgemv(&tr_n, &nw, &m, &d_mone, &M[0, 0], &nw, &lam[0], &one, &d_one, &rd[0], &one)
            if nx > 0:
                dgemv(&tr_t, &m, &nx, &d_mone, &Ncol[0, 0], &m, &lam[0], &one, &d_zero, &rx[0], &one)
            pobj = ddot(&nw, &c[0], &one, &w[0], &one)
            pres = dnrm2(&m, &rp[0], &one) / (1.0 + bnorm)
            acc = ddot(&nw, &rd[0], &one, &rd[0], &one)
            if nx > 0:
                acc = acc + ddot(&nx, &rx[0], &one, &rx[0], &one)
            dres = sqrt(acc) / (1.0 + cnorm)
            # complementarity gap; the objective difference also carries the
            # residuals times the multipliers and stalls when weights are large
            gap = ddot(&nw, &w[0], &one, &s[0], &one) / (1.0 + fabs(pobj))
            if pres <= feas_tol and dres <= feas_tol and gap <= gap_tol:
                code = C_CONVERGED
                break
            if it == max_iter:
                break
            mu = ddot(&nw, &w[0], &one, &s[0], &one) / nw

            # K = M diag(w/s) M^T via B = diag(sqrt(w/s)) M^T
            for i in range(m):
                for j in range(nw):
                    B[j, i] = sqrt(w[j] / s[j]) * M[i, j]
            dsyrk(&uplo, &tr_t, &m, &nw, &d_one, &B[0, 0], &nw, &d_zero, &Kraw[0, 0], &m)
            if _chol(K, Kraw) != 0:
                code = C_NUMERICAL
                break
            if nx > 0:
                for j in range(nx):
                    for i in range(m):
                        Z[i, j] = Ncol[i, j]
                dpotrs(&uplo, &m, &nx, &K[0, 0], &m, &Z[0, 0], &m, &info)
                dgemm(&tr_t, &tr_n, &nx, &nx, &m, &d_one, &Ncol[0, 0], &m, &Z[0, 0], &m,
                      &d_zero, &Sraw[0, 0], &nx)
                if _chol(S, Sraw) != 0:
                    code = C_NUMERICAL
                    break

            for phase in range(2):
                if phase == 0:
                    for j in range(nw):
                        rc[j] = -w[j] * s[j]
                else:
                    for j in range(nw):
                        rc[j] = sigma * mu - w[j] * s[j] - dw_a[j] * ds_a[j]
                # r1 = rp - M ((rc - w rd) / s)
                for j in range(nw):
                    tmp[j] = (rc[j] - w[j] * rd[j]) / s[j]
                for i in range(m):
                    r1[i] = rp[i]
                dgemv(&tr_t, &nw, &m, &d_mone, &M[0, 0], &nw, &tmp[0], &one, &d_one, &r1[0], &one)
                for i in range(m):
                    r1_rhs[i] = r1[i]
                dpotrs(&uplo, &m, &one, &K[0, 0], &m, &r1[0], &m, &info)
                # only without free variables: z must match the unrefined K^{-1} N otherwise
                for ref in range(REFINE if nx == 0 else 0):
                    for i in range(m):
                        r1_res[i] = r1_rhs[i]
                    dsymv(&uplo, &m, &d_mone, &Kraw[0, 0], &m, &r1[0], &one, &d_one, &r1_res[0], &one)
                    dpotrs(&uplo, &m, &one, &K[0, 0], &m, &r1_res[0], &m, &info)
                    for i in range(m):
                        r1[i] = r1[i] + r1_res[i]
                for i in range(m):
                    dlam[i] = r1[i]
                if nx > 0:
                    # dx = S^{-1} (N^T z - rx);  dlam = z - K^{-1} N dx
                    for j in range(nx):
                        tx[j] = -rx[j]
                    dgemv(&tr_t, &m, &nx, &d_one, &Ncol[0, 0], &m, &r1[0], &one, &d_one, &tx[0], &one)
                    dpotrs(&uplo, &nx, &one, &S[0, 0], &nx, &tx[0], &nx, &info)
                    for j in range(nx):
                        dx[j] = tx[j]
                    dgemv(&tr_n, &m, &nx, &d_mone, &Z[0, 0], &m, &dx[0], &one, &d_one, &dlam[0], &one)
                # ds = rd - M^T dlam;  dw = (rc - w ds) / s
                for j in range(nw):
                    ds[j] = rd[j]
                dgemv(&tr_n, &nw, &m, &d_mone, &M[0, 0], &nw, &dlam[0], &one, &d_one, &ds[0], &one)
                for j in range(nw):
                    dw[j] = (rc[j] - w[j] * ds[j]) / s[j]

                if phase == 0:
                    ap = _max_step(w, dw)
                    ad = _max_step(s, ds)
                    mu_aff = 0.0
                    for j in range(nw):
                        mu_aff = mu_aff + (w[j] + ap * dw[j]) * (s[j] + ad * ds[j])
                        dw_a[j] = dw[j]
                        ds_a[j] = ds[j]
                    mu_aff = mu_aff / nw
                    sigma = (mu_aff / mu) * (mu_aff / mu) * (mu_aff / mu)

            acc = 0.0
            for j in range(nw):
                acc = acc + dw[j] + ds[j]
            for i in range(m):
                acc = acc + dlam[i]
            for j in range(nx):
                acc = acc + dx[j]
            if not isfinite(acc):
                code = C_NUMERICAL
                break
            ap = STEP_ETA * _max_step(w, dw)
            ad = STEP_ETA * _max_step(s, ds)
            if ap > 1.0:
                ap = 1.0
            if ad > 1.0:
                ad = 1.0
            for j in range(nw):
                w[j] = w[j] + ap * dw[j]
                s[j] = s[j] + ad * ds[j]
            for j in range(nx):
                x[j] = x[j] + ap * dx[j]
            for i in range(m):
                lam[i] = lam[i] + ad * dlam[i]
            it += 1

    return (np.asarray(w).copy(), np.asarray(x)[:nx].copy(), np.asarray(lam).copy(),
            np.asarray(s).copy(), it, code)


def subset_l0_counts(A_in, y_in, double ztol, double pivot_tol):
    """l0 count of ``y - A x_S`` for every size-``r`` row subset, lexicographic order.

    Singular blocks (LU pivot below ``pivot_tol`` times the block's largest
    entry) get count ``-1``.
    """
    cdef double[:, ::1] A = np.require(A_in, np.float64, ['C', 'W'])
    cdef double[::1] y = np.require(y_in, np.float64, ['C', 'W'])
    cdef Py_ssize_t n = A.shape[0], r = A.shape[1]
    from math import comb
    cdef Py_ssize_t total = comb(n, r)
    counts_arr = np.empty(total, dtype=np.int32)
    cdef int[::1] counts = counts_arr
    cdef Py_ssize_t[::1] idx = np.arange(r, dtype=np.intp)
    cdef double[:, ::1] L = np.empty((r, r))
    cdef double[::1] rhs = np.empty(r)
    cdef double[::1] xs = np.empty(r)
    cdef Py_ssize_t k, i, j, p, q, piv
    cdef double amax, best, f, e
    cdef int cnt, singular

    with nogil:
        for k in range(total):
            amax = 0.0
            for i in range(r):
                rhs[i] = y[idx[i]]
                for j in range(r):
                    L[i, j] = A[idx[i], j]
                    if fabs(L[i, j]) > amax:
                        amax = fabs(L[i, j])
            singular = 0
            for p in range(r):
                piv = p
                best = fabs(L[p, p])
                for q in range(p + 1, r):
                    if fabs(L[q, p]) > best:
                        best = fabs(L[q, p])
                        piv = q
                if best <= pivot_tol * amax:
                    singular = 1
                    break
                if piv != p:
                    for j in range(r):
                        f = L[p, j]
                        L[p, j] = L[piv, j]
                        L[piv, j] = f
                    f = rhs[p]
                    rhs[p] = rhs[piv]
                    rhs[piv] = f
                for q in range(p + 1, r):
                    f = L[q, p] / L[p, p]
                    for j in range(p, r):
                        L[q, j] -= f * L[p, j]
                    rhs[q] -= f * rhs[p]
            if singular:
                counts[k] = -1
            else:
                for p in range(r - 1, -1, -1):
                    f = rhs[p]
                    for j in range(p + 1, r):
                        f -= L[p, j] * xs[j]
                    xs[p] = f / L[p, p]
                cnt = 0
                for i in range(n):
                    e = y[i]
                    for j in range(r):
                        e -= A[i, j] * xs[j]
                    if fabs(e) > ztol:
                        cnt += 1
                counts[k] = cnt
            # next combination in lexicographic order
            i = r - 1
            while i >= 0 and idx[i] == n - r + i:
                i -= 1
            if i < 0:
                break
            idx[i] += 1
            for j in range(i + 1, r):
                idx[j] = idx[j - 1] + 1
    return counts_arr
