"""Pure-Python kernel backend.

Mirror of _core.pyx: same routines, same arithmetic, same operation order.
Only +, -, *, / and sqrt are used so results agree with the compiled
backend bit for bit (the extension is built with -ffp-contract=off).
All matrices are flat row-major lists of floats.
"""

from __future__ import annotations

import math

BACKEND = "pure-python"

STATUS_CONVERGED = 0
STATUS_ITERATION_CAP = 1
STATUS_NUMERICAL_FAILURE = 2

JACOBI_MAX_SWEEPS = 60
NEWTON_DECREMENT_TOL = 1e-8
HESS_REGULARIZATION = 1e-12
MAX_BACKTRACK = 60
LAMBDA_DIVERGED = -1e12


def jacobi_eigenvalues(a, n):
    """Eigenvalues of a symmetric n*n matrix by cyclic Jacobi rotations.

    Returns (ok, ascending list). ok is False when the off-diagonal mass
    has not vanished after JACOBI_MAX_SWEEPS sweeps.
    """
    w = [float(v) for v in a]
    if n == 1:
        return True, [w[0]]
    scale = 1.0
    for v in w:
        av = v if v >= 0.0 else -v
        if av > scale:
            scale = av
    tol_off = 1e-13 * scale
    ok = False
    for _ in range(JACOBI_MAX_SWEEPS):
        off = 0.0
        for p in range(n - 1):
            for q in range(p + 1, n):
                off += w[p * n + q] * w[p * n + q]
        if math.sqrt(off) <= tol_off:
            ok = True
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = w[p * n + q]
                if apq == 0.0:
                    continue
                theta = (w[q * n + q] - w[p * n + p]) / (2.0 * apq)
                at = theta if theta >= 0.0 else -theta
                t = 1.0 / (at + math.sqrt(1.0 + at * at))
                if theta < 0.0:
                    t = -t
                c = 1.0 / math.sqrt(1.0 + t * t)
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
    eigs = [w[i * n + i] for i in range(n)]
    for i in range(1, n):
        v = eigs[i]
        j = i - 1
        while j >= 0 and eigs[j] > v:
            eigs[j + 1] = eigs[j]
            j -= 1
        eigs[j + 1] = v
    return ok, eigs


def cholesky_lower(a, n):
    """Lower Cholesky factor of a flat symmetric matrix.

    Returns (ok, L flat). ok is False as soon as a pivot is <= 0; the
    partial factor is returned for inspection but is not a valid factor.
    """
    l = [0.0] * (n * n)
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
            return False, l
        l[i * n + i] = math.sqrt(acc)
    return True, l


def _chol_solve_inplace(l, n, x, ncols):
    # forward substitution L y = b, then back substitution L^T x = y
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


def spd_solve(a, n, b, ncols):
    """Solve A X = B for SPD A with one iterative-refinement pass.

    Returns (ok, X flat); ok is False when A is not positive definite.
    """
    ok, l = cholesky_lower(a, n)
    if not ok:
        return False, [0.0] * (n * ncols)
    x = [float(v) for v in b]
    _chol_solve_inplace(l, n, x, ncols)
    r = [0.0] * (n * ncols)
    for i in range(n):
        for col in range(ncols):
            acc = b[i * ncols + col]
            for k in range(n):
                acc -= a[i * n + k] * x[k * ncols + col]
            r[i * ncols + col] = acc
    _chol_solve_inplace(l, n, r, ncols)
    for i in range(n * ncols):
        x[i] += r[i]
    return True, x


def _spd_inverse(l, n, out):
    # inverse from the Cholesky factor, column by column
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


def _block_matrix(n, nc, base_off, bases, idx_off, cidx, mat_off, cmats, x, out):
    # out = base + sum_j x[cidx[j]] * A_j for one block
    nn = n * n
    for i in range(nn):
        out[i] = bases[base_off + i]
    for j in range(nc):
        xv = x[cidx[idx_off + j]]
        moff = mat_off + j * nn
        for i in range(nn):
            out[i] += xv * cmats[moff + i]


def evp_solve(dims, bases, ncoeffs, cidx, cmats, d, t0, mu, tol_rel, max_outer, max_inner):
    """Barrier interior-point solve of: min lam s.t. G_k(x) < lam I for all k.

    Block k is G_k(x) = base_k + sum_j x_{cidx} * cmat_j, all flat row-major.
    Returns (status, lam_certificate, x list, newton_iterations). The
    certificate is max_k max_eig(G_k(x_final)), an achieved bound.
    """
    nb = len(dims)
    m_total = 0
    for k in range(nb):
        m_total += dims[k]
    dims = [int(v) for v in dims]
    bases = [float(v) for v in bases]
    ncoeffs = [int(v) for v in ncoeffs]
    cidx = [int(v) for v in cidx]
    cmats = [float(v) for v in cmats]

    # per-block offsets into the flat inputs
    idx_off = [0] * nb
    mat_off = [0] * nb
    base_off = [0] * nb
    acc_i = 0
    acc_m = 0
    acc_b = 0
    for k in range(nb):
        idx_off[k] = acc_i
        mat_off[k] = acc_m
        base_off[k] = acc_b
        acc_i += ncoeffs[k]
        acc_m += ncoeffs[k] * dims[k] * dims[k]
        acc_b += dims[k] * dims[k]

    def certificate(xv):
        best = None
        buf = [0.0] * (max(dims) * max(dims))
        for k in range(nb):
            _block_matrix(dims[k], ncoeffs[k], base_off[k], bases, idx_off[k], cidx,
                          mat_off[k], cmats, xv, buf)
            ok, eigs = jacobi_eigenvalues(buf[: dims[k] * dims[k]], dims[k])
            if not ok:
                return False, 0.0
            top = eigs[dims[k] - 1]
            if best is None or top > best:
                best = top
        return True, best

    x = [0.0] * d
    ok, lam = certificate(x)
    if not ok:
        return STATUS_NUMERICAL_FAILURE, 0.0, x, 0
    if d == 0:
        return STATUS_CONVERGED, lam, x, 0
    lam += 1.0

    nt = d + 1
    maxn = max(dims)
    blk = [0.0] * (maxn * maxn)
    s_mat = [0.0] * (maxn * maxn)
    s_inv = [0.0] * (maxn * maxn)
    tmp = [0.0] * (maxn * maxn)
    wvar = [0.0] * (maxn * maxn)
    status = STATUS_ITERATION_CAP
    iterations = 0
    t = t0

    def feasible_at(xv, lamv):
        for k in range(nb):
            n = dims[k]
            _block_matrix(n, ncoeffs[k], base_off[k], bases, idx_off[k], cidx,
                          mat_off[k], cmats, xv, blk)
            for i in range(n):
                for j in range(n):
                    s_mat[i * n + j] = -blk[i * n + j]
                s_mat[i * n + i] += lamv
            okc, _ = cholesky_lower(s_mat[: n * n], n)
            if not okc:
                return False
        return True

    for _outer in range(max_outer):
        for _inner in range(max_inner):
            g = [0.0] * nt
            h = [0.0] * (nt * nt)
            g[d] = t
            failed = False
            for k in range(nb):
                n = dims[k]
                nn = n * n
                _block_matrix(n, ncoeffs[k], base_off[k], bases, idx_off[k], cidx,
                              mat_off[k], cmats, x, blk)
                for i in range(n):
                    for j in range(n):
                        s_mat[i * n + j] = -blk[i * n + j]
                    s_mat[i * n + i] += lam
                okc, lfac = cholesky_lower(s_mat[:nn], n)
                if not okc:
                    failed = True
                    break
                _spd_inverse(lfac, n, s_inv)
                # lambda coordinate: dS/dlam = I
                tr_inv = 0.0
                for i in range(n):
                    tr_inv += s_inv[i * n + i]
                g[d] -= tr_inv
                tr_inv2 = 0.0
                for i in range(n):
                    for kk in range(n):
                        tr_inv2 += s_inv[i * n + kk] * s_inv[kk * n + i]
                h[d * nt + d] += tr_inv2
                # coefficient coordinates: dS/dx_j = -A_j
                nc = ncoeffs[k]
                for j in range(nc):
                    vj = cidx[idx_off[k] + j]
                    aoff = mat_off[k] + j * nn
                    # g[vj] += tr(Sinv A_j)
                    acc = 0.0
                    for i in range(n):
                        for kk in range(n):
                            acc += s_inv[i * n + kk] * cmats[aoff + kk * n + i]
                    g[vj] += acc
                    # W_j = Sinv A_j Sinv
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
                    # H[vj, d] += -tr(W_j)
                    tr_w = 0.0
                    for i in range(n):
                        tr_w += wvar[i * n + i]
                    h[vj * nt + d] -= tr_w
                    h[d * nt + vj] -= tr_w
                    # H[vj, vj2] += <W_j, A_j2> for j2 <= j
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
                return STATUS_NUMERICAL_FAILURE, lam, x, iterations
            okh, lh = cholesky_lower(h, nt)
            if not okh:
                for i in range(nt):
                    h[i * nt + i] += HESS_REGULARIZATION
                okh, lh = cholesky_lower(h, nt)
                if not okh:
                    return STATUS_NUMERICAL_FAILURE, lam, x, iterations
            step_dir = [-g[i] for i in range(nt)]
            _chol_solve_inplace(lh, nt, step_dir, 1)
            dec2 = 0.0
            for i in range(nt):
                dec2 -= g[i] * step_dir[i]
            if dec2 < 0.0:
                dec2 = 0.0
            delta = math.sqrt(dec2)
            iterations += 1
            if delta <= NEWTON_DECREMENT_TOL:
                break
            step = 1.0 if delta <= 0.25 else 1.0 / (1.0 + delta)
            accepted = False
            for _bt in range(MAX_BACKTRACK):
                xn = [x[i] + step * step_dir[i] for i in range(d)]
                lamn = lam + step * step_dir[d]
                if feasible_at(xn, lamn):
                    accepted = True
                    break
                step *= 0.5
            if not accepted:
                okc, cert = certificate(x)
                return (STATUS_ITERATION_CAP if okc else STATUS_NUMERICAL_FAILURE,
                        cert if okc else lam, x, iterations)
            x = xn
            lam = lamn
        gap = m_total / t
        bound = lam if lam >= 0.0 else -lam
        if bound < 1.0:
            bound = 1.0
        if gap < tol_rel * bound:
            status = STATUS_CONVERGED
            break
        if lam < LAMBDA_DIVERGED:
            status = STATUS_ITERATION_CAP
            break
        t *= mu
        # cap the final stage at the weight that already meets the gap
        # target: overshooting it squares away the Hessian's working
        # precision for no accuracy gain
        t_need = 1.0001 * m_total / (tol_rel * bound)
        if t > t_need:
            t = t_need
    ok, cert = certificate(x)
    if not ok:
        return STATUS_NUMERICAL_FAILURE, lam, x, iterations
    return status, cert, x, iterations
