# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled kernel backend.

Line-for-line mirror of pyfallback.py: same routines, same arithmetic,
same operation order. Built with -ffp-contract=off so the C compiler
cannot fuse multiply-adds, keeping results identical to the pure backend.
"""

import numpy as np

from libc.math cimport sqrt

BACKEND = "compiled"

STATUS_CONVERGED = 0
STATUS_ITERATION_CAP = 1
STATUS_NUMERICAL_FAILURE = 2

JACOBI_MAX_SWEEPS = 60
NEWTON_DECREMENT_TOL = 1e-8
HESS_REGULARIZATION = 1e-12
MAX_BACKTRACK = 60
LAMBDA_DIVERGED = -1e12

cdef int _JACOBI_MAX_SWEEPS = 60
cdef double _NEWTON_DECREMENT_TOL = 1e-8
cdef double _HESS_REGULARIZATION = 1e-12
cdef int _MAX_BACKTRACK = 60
cdef double _LAMBDA_DIVERGED = -1e12


cdef bint _jacobi_flat(double[::1] src, int n, double[::1] w, double[::1] eigs) noexcept:
    cdef int i, j, p, q, r, sweep
    cdef double scale, av, tol_off, off, apq, theta, at, t, c, s
    cdef double app, aqq, arp, arq, v
    for i in range(n * n):
        w[i] = src[i]
    if n == 1:
        eigs[0] = w[0]
        return True
    scale = 1.0
    for i in range(n * n):
        av = w[i] if w[i] >= 0.0 else -w[i]
        if av > scale:
            scale = av
    tol_off = 1e-13 * scale
    cdef bint ok = False
    for sweep in range(_JACOBI_MAX_SWEEPS):
        off = 0.0
        for p in range(n - 1):
            for q in range(p + 1, n):
                off += w[p * n + q] * w[p * n + q]
        if sqrt(off) <= tol_off:
            ok = True
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = w[p * n + q]
                if apq == 0.0:
                    continue
                theta = (w[q * n + q] - w[p * n + p]) / (2.0 * apq)
                at = theta if theta >= 0.0 else -theta
                t = 1.0 / (at + sqrt(1.0 + at * at))
                if theta < 0.0:
                    t = -t
                c = 1.0 / sqrt(1.0 + t * t)
                s = t * c
                app = w[p * n + p]
                aqq = w[q * n + q]
                w[p * n + p] = app - t * apq
                w[q * n + q] = aqq + t * apq
                w[p * n + q] = 0.0
                w[q * n + p] = 0.0
                for r in range(n):
                    if r == p or r == q:
                        continue
                    arp = w[r * n + p]
                    arq = w[r * n + q]
                    w[r * n + p] = c * arp - s * arq
                    w[p * n + r] = w[r * n + p]
                    w[r * n + q] = s * arp + c * arq
                    w[q * n + r] = w[r * n + q]
    for i in range(n):
        eigs[i] = w[i * n + i]
    for i in range(1, n):
        v = eigs[i]
        j = i - 1
        while j >= 0 and eigs[j] > v:
            eigs[j + 1] = eigs[j]
            j -= 1
        eigs[j + 1] = v
    return ok


cdef bint _chol_flat(double[::1] a, double[::1] l, int n) noexcept:
    cdef int i, j, k
    cdef double acc
    for i in range(n * n):
        l[i] = 0.0
    for i in range(n):
        for j in range(i):
            acc = a[i * n + j]
            for k in range(j):
                acc -= l[i * n + k] * l[j * n + k]
            l[i * n + j] = acc / l[j * n + j]
        acc = a[i * n + i]
        for k in range(i):
            acc -= l[i * n + k] * l[i * n + k]
        # "not >" also rejects a NaN pivot, which a plain <= would let through
        if not acc > 0.0:
            return False
        l[i * n + i] = sqrt(acc)
    return True


cdef void _chol_solve_flat(double[::1] l, int n, double[::1] x, int ncols) noexcept:
    cdef int col, i, k
    cdef double acc
    for col in range(ncols):
        for i in range(n):
            acc = x[i * ncols + col]
            for k in range(i):
                acc -= l[i * n + k] * x[k * ncols + col]
            x[i * ncols + col] = acc / l[i * n + i]
        for i in range(n - 1, -1, -1):
            acc = x[i * ncols + col]
            for k in range(i + 1, n):
                acc -= l[k * n + i] * x[k * ncols + col]
            x[i * ncols + col] = acc / l[i * n + i]


cdef void _spd_inverse_flat(double[::1] l, int n, double[::1] out) noexcept:
    cdef int col, i, k
    cdef double acc
    for col in range(n):
        for i in range(n):
            acc = 1.0 if i == col else 0.0
            for k in range(i):
                acc -= l[i * n + k] * out[k * n + col]
            out[i * n + col] = acc / l[i * n + i]
        for i in range(n - 1, -1, -1):
            acc = out[i * n + col]
            for k in range(i + 1, n):
                acc -= l[k * n + i] * out[k * n + col]
            out[i * n + col] = acc / l[i * n + i]


cdef void _block_matrix_flat(int n, int nc, int boff, double[::1] bases,
                             int ioff, int[::1] cidx, int moff, double[::1] cmats,
                             double[::1] x, double[::1] out) noexcept:
    cdef int i, j, moff_j
    cdef double xv
    cdef int nn = n * n
    for i in range(nn):
        out[i] = bases[boff + i]
    for j in range(nc):
        xv = x[cidx[ioff + j]]
        moff_j = moff + j * nn
        for i in range(nn):
            out[i] += xv * cmats[moff_j + i]


cdef object _writable_f64(object a):
    arr = np.ascontiguousarray(a, dtype=np.float64)
    if not arr.flags.writeable:
        arr = arr.copy()
    return arr


cdef object _writable_i32(object a):
    arr = np.ascontiguousarray(a, dtype=np.int32)
    if not arr.flags.writeable:
        arr = arr.copy()
    return arr


def jacobi_eigenvalues(a, n):
    """Eigenvalues of a symmetric n*n matrix by cyclic Jacobi rotations."""
    cdef double[::1] src = _writable_f64(a)
    cdef int cn = n
    w = np.empty(cn * cn, dtype=np.float64)
    eigs = np.empty(cn, dtype=np.float64)
    cdef bint ok = _jacobi_flat(src, cn, w, eigs)
    return bool(ok), eigs


def cholesky_lower(a, n):
    """Lower Cholesky factor of a flat symmetric matrix."""
    cdef double[::1] src = _writable_f64(a)
    cdef int cn = n
    l = np.empty(cn * cn, dtype=np.float64)
    cdef bint ok = _chol_flat(src, l, cn)
    return bool(ok), l


def spd_solve(a, n, b, ncols):
    """Solve A X = B for SPD A with one iterative-refinement pass."""
    cdef double[::1] ca = _writable_f64(a)
    cdef int cn = n
    cdef int cc = ncols
    cdef double[::1] cb = _writable_f64(b)
    l = np.empty(cn * cn, dtype=np.float64)
    cdef double[::1] lv = l
    if not _chol_flat(ca, lv, cn):
        return False, np.zeros(cn * cc, dtype=np.float64)
    x = np.array(cb, dtype=np.float64, copy=True)
    cdef double[::1] xv = x
    _chol_solve_flat(lv, cn, xv, cc)
    r = np.empty(cn * cc, dtype=np.float64)
    cdef double[::1] rv = r
    cdef int i, col, k
    cdef double acc
    for i in range(cn):
        for col in range(cc):
            acc = cb[i * cc + col]
            for k in range(cn):
                acc -= ca[i * cn + k] * xv[k * cc + col]
            rv[i * cc + col] = acc
    _chol_solve_flat(lv, cn, rv, cc)
    for i in range(cn * cc):
        xv[i] += rv[i]
    return True, x


cdef int _certificate(int nb, int[::1] dims, int[::1] ncoeffs, int[::1] base_off,
                      int[::1] idx_off, int[::1] mat_off, double[::1] bases,
                      int[::1] cidx, double[::1] cmats, double[::1] x,
                      double[::1] buf, double[::1] jwork, double[::1] jeigs,
                      double* out) noexcept:
    cdef int k
    cdef double best = 0.0, top
    cdef bint have = False
    for k in range(nb):
        _block_matrix_flat(dims[k], ncoeffs[k], base_off[k], bases, idx_off[k], cidx,
                           mat_off[k], cmats, x, buf)
        if not _jacobi_flat(buf, dims[k], jwork, jeigs):
            return 0
        top = jeigs[dims[k] - 1]
        if (not have) or top > best:
            best = top
            have = True
    out[0] = best
    return 1


cdef bint _feasible_at(int nb, int[::1] dims, int[::1] ncoeffs, int[::1] base_off,
                       int[::1] idx_off, int[::1] mat_off, double[::1] bases,
                       int[::1] cidx, double[::1] cmats, double[::1] x, double lam,
                       double[::1] blk, double[::1] s_mat, double[::1] lwork) noexcept:
    cdef int k, n, i, j
    for k in range(nb):
        n = dims[k]
        _block_matrix_flat(n, ncoeffs[k], base_off[k], bases, idx_off[k], cidx,
                           mat_off[k], cmats, x, blk)
        for i in range(n):
            for j in range(n):
                s_mat[i * n + j] = -blk[i * n + j]
            s_mat[i * n + i] += lam
        if not _chol_flat(s_mat, lwork, n):
            return False
    return True


def evp_solve(dims_in, bases_in, ncoeffs_in, cidx_in, cmats_in, d_in,
              t0, mu, tol_rel_in, max_outer_in, max_inner_in):
    """Barrier interior-point solve of: min lam s.t. G_k(x) < lam I for all k."""
    cdef int[::1] dims = _writable_i32(dims_in)
    cdef double[::1] bases = _writable_f64(bases_in)
    cdef int[::1] ncoeffs = _writable_i32(ncoeffs_in)
    cdef int[::1] cidx = _writable_i32(cidx_in)
    cdef double[::1] cmats = _writable_f64(cmats_in)
    cdef int d = d_in
    cdef double t = t0
    cdef double cmu = mu
    cdef double tol_rel = tol_rel_in
    cdef int max_outer = max_outer_in
    cdef int max_inner = max_inner_in

    cdef int nb = dims.shape[0]
    cdef int m_total = 0
    cdef int k, i, j, kk, jj, j2
    for k in range(nb):
        m_total += dims[k]

    base_off_a = np.empty(nb, dtype=np.int32)
    idx_off_a = np.empty(nb, dtype=np.int32)
    mat_off_a = np.empty(nb, dtype=np.int32)
    cdef int[::1] base_off = base_off_a
    cdef int[::1] idx_off = idx_off_a
    cdef int[::1] mat_off = mat_off_a
    cdef int acc_i = 0, acc_m = 0, acc_b = 0
    for k in range(nb):
        idx_off[k] = acc_i
        mat_off[k] = acc_m
        base_off[k] = acc_b
        acc_i += ncoeffs[k]
        acc_m += ncoeffs[k] * dims[k] * dims[k]
        acc_b += dims[k] * dims[k]

    cdef int maxn = 0
    for k in range(nb):
        if dims[k] > maxn:
            maxn = dims[k]

    x_a = np.zeros(d, dtype=np.float64)
    cdef double[::1] x = x_a
    buf_a = np.empty(maxn * maxn, dtype=np.float64)
    jwork_a = np.empty(maxn * maxn, dtype=np.float64)
    jeigs_a = np.empty(maxn, dtype=np.float64)
    cdef double[::1] buf = buf_a
    cdef double[::1] jwork = jwork_a
    cdef double[::1] jeigs = jeigs_a

    cdef double lam = 0.0
    if not _certificate(nb, dims, ncoeffs, base_off, idx_off, mat_off, bases, cidx,
                        cmats, x, buf, jwork, jeigs, &lam):
        return STATUS_NUMERICAL_FAILURE, 0.0, x_a, 0
    if d == 0:
        return STATUS_CONVERGED, lam, x_a, 0
    lam += 1.0

    cdef int nt = d + 1
    blk_a = np.empty(maxn * maxn, dtype=np.float64)
    s_mat_a = np.empty(maxn * maxn, dtype=np.float64)
    s_inv_a = np.empty(maxn * maxn, dtype=np.float64)
    tmp_a = np.empty(maxn * maxn, dtype=np.float64)
    wvar_a = np.empty(maxn * maxn, dtype=np.float64)
    lwork_a = np.empty(maxn * maxn, dtype=np.float64)
    cdef double[::1] blk = blk_a
    cdef double[::1] s_mat = s_mat_a
    cdef double[::1] s_inv = s_inv_a
    cdef double[::1] tmp = tmp_a
    cdef double[::1] wvar = wvar_a
    cdef double[::1] lwork = lwork_a
    g_a = np.empty(nt, dtype=np.float64)
    h_a = np.empty(nt * nt, dtype=np.float64)
    lh_a = np.empty(nt * nt, dtype=np.float64)
    sd_a = np.empty(nt, dtype=np.float64)
    xn_a = np.empty(d, dtype=np.float64)
    cdef double[::1] g = g_a
    cdef double[::1] h = h_a
    cdef double[::1] lh = lh_a
    cdef double[::1] step_dir = sd_a
    cdef double[::1] xn = xn_a

    cdef int status = STATUS_ITERATION_CAP
    cdef int iterations = 0
    cdef int n, nn, nc, vj, vj2, aoff, a2off
    cdef bint failed, okh, accepted
    cdef double tr_inv, tr_inv2, acc, tr_w, dec2, delta, step, lamn, gap, bound, cert
    cdef double t_need
    cdef int _outer, _inner, _bt

    for _outer in range(max_outer):
        for _inner in range(max_inner):
            for i in range(nt):
                g[i] = 0.0
            for i in range(nt * nt):
                h[i] = 0.0
            g[d] = t
            failed = False
            for k in range(nb):
                n = dims[k]
                nn = n * n
                _block_matrix_flat(n, ncoeffs[k], base_off[k], bases, idx_off[k], cidx,
                                   mat_off[k], cmats, x, blk)
                for i in range(n):
                    for j in range(n):
                        s_mat[i * n + j] = -blk[i * n + j]
                    s_mat[i * n + i] += lam
                if not _chol_flat(s_mat, lwork, n):
                    failed = True
                    break
                _spd_inverse_flat(lwork, n, s_inv)
                tr_inv = 0.0
                for i in range(n):
                    tr_inv += s_inv[i * n + i]
                g[d] -= tr_inv
                tr_inv2 = 0.0
                for i in range(n):
                    for kk in range(n):
                        tr_inv2 += s_inv[i * n + kk] * s_inv[kk * n + i]
                h[d * nt + d] += tr_inv2
                nc = ncoeffs[k]
                for j in range(nc):
                    vj = cidx[idx_off[k] + j]
                    aoff = mat_off[k] + j * nn
                    acc = 0.0
                    for i in range(n):
                        for kk in range(n):
                            acc += s_inv[i * n + kk] * cmats[aoff + kk * n + i]
                    g[vj] += acc
                    for i in range(n):
                        for jj in range(n):
                            acc = 0.0
                            for kk in range(n):
                                acc += s_inv[i * n + kk] * cmats[aoff + kk * n + jj]
                            tmp[i * n + jj] = acc
                    for i in range(n):
                        for jj in range(n):
                            acc = 0.0
                            for kk in range(n):
                                acc += tmp[i * n + kk] * s_inv[kk * n + jj]
                            wvar[i * n + jj] = acc
                    tr_w = 0.0
                    for i in range(n):
                        tr_w += wvar[i * n + i]
                    h[vj * nt + d] -= tr_w
                    h[d * nt + vj] -= tr_w
                    for j2 in range(j + 1):
                        vj2 = cidx[idx_off[k] + j2]
                        a2off = mat_off[k] + j2 * nn
                        acc = 0.0
                        for i in range(nn):
                            acc += wvar[i] * cmats[a2off + i]
                        h[vj * nt + vj2] += acc
                        if vj2 != vj:
                            h[vj2 * nt + vj] += acc
            if failed:
                return STATUS_NUMERICAL_FAILURE, lam, x_a, iterations
            okh = _chol_flat(h, lh, nt)
            if not okh:
                for i in range(nt):
                    h[i * nt + i] += _HESS_REGULARIZATION
                okh = _chol_flat(h, lh, nt)
                if not okh:
                    return STATUS_NUMERICAL_FAILURE, lam, x_a, iterations
            for i in range(nt):
                step_dir[i] = -g[i]
            _chol_solve_flat(lh, nt, step_dir, 1)
            dec2 = 0.0
            for i in range(nt):
                dec2 -= g[i] * step_dir[i]
            if dec2 < 0.0:
                dec2 = 0.0
            delta = sqrt(dec2)
            iterations += 1
            if delta <= _NEWTON_DECREMENT_TOL:
                break
            step = 1.0 if delta <= 0.25 else 1.0 / (1.0 + delta)
            accepted = False
            for _bt in range(_MAX_BACKTRACK):
                for i in range(d):
                    xn[i] = x[i] + step * step_dir[i]
                lamn = lam + step * step_dir[d]
                if _feasible_at(nb, dims, ncoeffs, base_off, idx_off, mat_off, bases,
                                cidx, cmats, xn, lamn, blk, s_mat, lwork):
                    accepted = True
                    break
                step *= 0.5
            if not accepted:
                if _certificate(nb, dims, ncoeffs, base_off, idx_off, mat_off, bases,
                                cidx, cmats, x, buf, jwork, jeigs, &cert):
                    return STATUS_ITERATION_CAP, cert, x_a, iterations
                return STATUS_NUMERICAL_FAILURE, lam, x_a, iterations
            for i in range(d):
                x[i] = xn[i]
            lam = lamn
        gap = m_total / t
        bound = lam if lam >= 0.0 else -lam
        if bound < 1.0:
            bound = 1.0
        if gap < tol_rel * bound:
            status = STATUS_CONVERGED
            break
        if lam < _LAMBDA_DIVERGED:
            status = STATUS_ITERATION_CAP
            break
        t *= cmu
        # cap the final stage at the weight that already meets the gap
        # target: overshooting it squares away the Hessian's working
        # precision for no accuracy gain
        t_need = 1.0001 * m_total / (tol_rel * bound)
        if t > t_need:
            t = t_need
    if not _certificate(nb, dims, ncoeffs, base_off, idx_off, mat_off, bases, cidx,
                        cmats, x, buf, jwork, jeigs, &cert):
        return STATUS_NUMERICAL_FAILURE, lam, x_a, iterations
    return status, cert, x_a, iterations
