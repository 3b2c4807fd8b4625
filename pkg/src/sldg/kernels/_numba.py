"""numba versions of the hot kernels; same signatures as ``_numpy``."""
import numpy as np
from numba import njit


@njit(cache=True, fastmath=True)
def stiffness(dref, metric, coeff):
    nq, n, _ = dref.shape
    ne = coeff.shape[0]
    nn = n * n
    # symmetric reference products shared by all elements
    p = np.empty((nq, 3, nn))
    for q in range(nq):
        for i in range(n):
            for j in range(n):
                k = i * n + j
                p[q, 0, k] = dref[q, i, 0] * dref[q, j, 0]
                p[q, 1, k] = dref[q, i, 0] * dref[q, j, 1] + dref[q, i, 1] * dref[q, j, 0]
                p[q, 2, k] = dref[q, i, 1] * dref[q, j, 1]
    out = np.zeros((ne, nn))
    for e in range(ne):
        m00 = metric[e, 0, 0]
        m01 = metric[e, 0, 1]
        m11 = metric[e, 1, 1]
        row = out[e]
        for q in range(nq):
            c = coeff[e, q]
            c0 = c * m00
            c1 = c * m01
            c2 = c * m11
            p0 = p[q, 0]
            p1 = p[q, 1]
            p2 = p[q, 2]
            for k in range(nn):
                row[k] += c0 * p0[k] + c1 * p1[k] + c2 * p2[k]
    return out.reshape(ne, n, n)


@njit(cache=True)
def physical_grad(coef, dref, inv_jt):
    ne, n = coef.shape
    nq = dref.shape[0]
    out = np.empty((ne, nq, 2))
    for e in range(ne):
        for q in range(nq):
            gx = 0.0
            gy = 0.0
            for i in range(n):
                gx += coef[e, i] * dref[q, i, 0]
                gy += coef[e, i] * dref[q, i, 1]
            out[e, q, 0] = inv_jt[e, 0, 0] * gx + inv_jt[e, 0, 1] * gy
            out[e, q, 1] = inv_jt[e, 1, 0] * gx + inv_jt[e, 1, 1] * gy
    return out


@njit(cache=True, fastmath=True)
def pair_products(a, b, w):
    nf, nq, na = a.shape
    nb = b.shape[2]
    out = np.zeros((nf, na, nb))
    for f in range(nf):
        blk = out[f]
        for q in range(nq):
            wq = w[f, q]
            bq = b[f, q]
            for i in range(na):
                ai = wq * a[f, q, i]
                bi = blk[i]
                for j in range(nb):
                    bi[j] += ai * bq[j]
    return out


@njit(cache=True)
def csr_matvec(indptr, indices, data, x, out):
    n = indptr.shape[0] - 1
    for i in range(n):
        s = 0.0
        for k in range(indptr[i], indptr[i + 1]):
            s += data[k] * x[indices[k]]
        out[i] = s
    return out


@njit(cache=True)
def pcg(indptr, indices, data, b, x, diag_inv, rtol, maxiter):
    n = b.shape[0]
    r = np.empty(n)
    ap = np.empty(n)
    csr_matvec(indptr, indices, data, x, ap)
    for i in range(n):
        r[i] = b[i] - ap[i]
    bnorm = np.sqrt(b @ b)
    if bnorm == 0.0:
        bnorm = 1.0
    z = diag_inv * r
    p = z.copy()
    rz = r @ z
    res = np.sqrt(r @ r) / bnorm
    k = 0
    while res > rtol and k < maxiter:
        csr_matvec(indptr, indices, data, p, ap)
        pap = p @ ap
        if pap <= 0.0:
            break
        alpha = rz / pap
        for i in range(n):
            x[i] += alpha * p[i]
            r[i] -= alpha * ap[i]
        res = np.sqrt(r @ r) / bnorm
        for i in range(n):
            z[i] = diag_inv[i] * r[i]
        rz_new = r @ z
        beta = rz_new / rz
        for i in range(n):
            p[i] = z[i] + beta * p[i]
        rz = rz_new
        k += 1
    return x, k, res
