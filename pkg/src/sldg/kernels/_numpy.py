"""Pure-numpy reference implementations of the hot kernels."""
import numpy as np


def stiffness(dref, metric, coeff):
    """Per-element matrices sum_q c_eq (J^-T dphi_i) . (J^-T dphi_j).

    dref: (nq, N, 2) reference gradients; metric: (Ne, 2, 2) = J^-1 J^-T;
    coeff: (Ne, nq) already carrying weights and |det J|.
    """
    nq, n, _ = dref.shape
    out = np.zeros((coeff.shape[0], n * n))
    for a in range(2):
        for b in range(2):
            prod = (dref[:, :, a, None] * dref[:, None, :, b]).reshape(nq, n * n)
            out += metric[:, a, b, None] * (coeff @ prod)
    return out.reshape(-1, n, n)


def physical_grad(coef, dref, inv_jt):
    """Gradients of element expansions at shared reference points.

    coef: (Ne, N); dref: (nq, N, 2); inv_jt: (Ne, 2, 2) = J^-T.
    Returns (Ne, nq, 2).
    """
    gref = np.einsum("en,qnk->eqk", coef, dref)
    return np.einsum("eak,eqk->eqa", inv_jt, gref)


def pair_products(a, b, w):
    """sum_q w_fq a_fqi b_fqj for each face f -> (Nf, Na, Nb)."""
    return np.matmul((a * w[:, :, None]).transpose(0, 2, 1), b)


def csr_matvec(indptr, indices, data, x, out):
    n = indptr.shape[0] - 1
    rows = np.repeat(np.arange(n), np.diff(indptr))
    out[:] = np.bincount(rows, weights=data * x[indices], minlength=n)
    return out


def pcg(indptr, indices, data, b, x, diag_inv, rtol, maxiter):
    """Jacobi-preconditioned CG; returns (x, iterations, relative residual)."""
    r = b.copy()
    ax = np.empty_like(b)
    csr_matvec(indptr, indices, data, x, ax)
    r -= ax
    bnorm = np.linalg.norm(b)
    if bnorm == 0.0:
        bnorm = 1.0
    z = diag_inv * r
    p = z.copy()
    rz = r @ z
    ap = np.empty_like(b)
    res = np.linalg.norm(r) / bnorm
    k = 0
    while res > rtol and k < maxiter:
        csr_matvec(indptr, indices, data, p, ap)
        pap = p @ ap
        if pap <= 0.0:
            break
        alpha = rz / pap
        x += alpha * p
        r -= alpha * ap
        res = np.linalg.norm(r) / bnorm
        z = diag_inv * r
        rz_new = r @ z
        p = z + (rz_new / rz) * p
        rz = rz_new
        k += 1
    return x, k, res
