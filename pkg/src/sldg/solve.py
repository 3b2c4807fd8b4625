"""Linear solves and the Picard (frozen-coefficient) outer iteration."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import kernels
from .assembly import BoundaryData, DgParams, SparseSystem, assemble
from .constitutive import ModelParams
from .dgspace import DgSpace, Solution

log = logging.getLogger(__name__)

DENSE_LIMIT = 2000


class SolverError(RuntimeError):
    def __init__(self, msg: str, residual: float):
        super().__init__(f"{msg} (relative residual {residual:.3e})")
        self.residual = residual


def _as_system(sys_or_matrix, rhs=None) -> tuple[sp.csr_matrix, np.ndarray]:
    if isinstance(sys_or_matrix, SparseSystem):
        return sys_or_matrix.matrix, sys_or_matrix.rhs
    return sp.csr_matrix(sys_or_matrix), np.asarray(rhs, dtype=float)


def _rel_residual(A, x, b) -> float:
    bn = np.linalg.norm(b)
    return float(np.linalg.norm(A @ x - b) / (bn if bn > 0 else 1.0))


def _dense(A, b) -> np.ndarray:
    M = A.toarray()
    try:
        return sla.solve(M, b, assume_a="sym")
    except (sla.LinAlgError, ValueError):
        return sla.solve(M, b)


def linear_solve(system, rhs=None, rel_tol: float = 1e-12, method: str = "cg",
                 x0: np.ndarray | None = None) -> np.ndarray:
    """Solve ``A x = b``.

    ``method``: ``"cg"`` (Jacobi-preconditioned CG; dense factorisation for
    small systems or when CG stagnates), ``"direct"`` (sparse LU) or
    ``"dense"``.
    """
    A, b = _as_system(system, rhs)
    n = b.shape[0]
    if A.shape != (n, n):
        raise ValueError(f"matrix shape {A.shape} does not match rhs length {n}")
    if not np.any(b):
        return np.zeros(n)
    if method == "dense" or (method == "cg" and n <= DENSE_LIMIT):
        x = _dense(A, b)
    elif method == "direct":
        x = spla.splu(A.tocsc(), permc_spec="COLAMD").solve(b)
    elif method == "cg":
        d = A.diagonal()
        if np.any(d <= 0):
            raise SolverError("matrix has a non-positive diagonal; CG needs SPD", np.inf)
        x = np.zeros(n) if x0 is None else np.array(x0, dtype=float)
        x, its, res = kernels.pcg(A.indptr.astype(np.int64), A.indices.astype(np.int64),
                                  A.data, b, x, 1.0 / d, rel_tol, 10 * n)
        if res > rel_tol:
            log.info("CG stopped after %d iterations at %.3e; using sparse LU", its, res)
            x = spla.splu(A.tocsc()).solve(b)
    else:
        raise ValueError(f"unknown linear solver {method!r}")
    res = _rel_residual(A, x, b)
    if not np.isfinite(res) or res > max(rel_tol, 1e-8):
        raise SolverError("linear solve did not converge", res)
    return x


@dataclass
class PicardReport:
    solution: Solution
    errors: list[float] = field(default_factory=list)
    converged: bool = False

    @property
    def iterations(self) -> int:
        return len(self.errors)


def l2_norm_coeffs(space: DgSpace, c: np.ndarray) -> float:
    # orthonormal modes: ||u||^2 = sum_T |det J_T| * sum_i c_i^2
    per = np.add.reduceat(c**2, space.offsets[:-1])
    return float(np.sqrt(np.sum(space.mesh.det * per)))


def _anderson_step(xs: list[np.ndarray], fs: list[np.ndarray]) -> np.ndarray:
    # type-II Anderson mixing of the last len(xs) fixed-point pairs
    r = [f - x for x, f in zip(xs, fs)]
    dR = np.column_stack([r[i + 1] - r[i] for i in range(len(r) - 1)])
    dF = np.column_stack([fs[i + 1] - fs[i] for i in range(len(fs) - 1)])
    gamma, *_ = np.linalg.lstsq(dR, r[-1], rcond=None)
    return fs[-1] - dF @ gamma


def picard(space: DgSpace, p: ModelParams, dg: DgParams, bd: BoundaryData,
           tol: float = 1e-10, max_iter: int = 100, initial: Solution | None = None,
           relaxation: float = 1.0, solver: str = "direct", anderson: int = 0) -> PicardReport:
    """Fixed-point iteration u_{k+1} = solve(A(u_k) u = b(u_k)).

    ``relaxation`` < 1 damps each update.  ``anderson`` > 0 mixes the last
    ``anderson`` + 1 iterates (Anderson acceleration); 0 gives the plain
    frozen-coefficient iteration.
    """
    if not tol > 0 or max_iter < 1:
        raise ValueError("tol must be > 0 and max_iter >= 1")
    if not 0 < relaxation <= 1:
        raise ValueError("relaxation must lie in (0, 1]")
    if anderson < 0:
        raise ValueError("anderson depth must be >= 0")
    if initial is None:
        sys0 = assemble(space, None, p, dg, bd)
        u = Solution(space, linear_solve(sys0, method=solver))
    else:
        if initial.space is not space:
            raise ValueError("initial guess lives on a different space")
        u = initial.copy()
    report = PicardReport(u)
    xs: list[np.ndarray] = []
    fs: list[np.ndarray] = []
    for k in range(max_iter):
        sys_k = assemble(space, u, p, dg, bd)
        image = linear_solve(sys_k, method=solver, x0=u.coeffs)
        err = l2_norm_coeffs(space, image - u.coeffs) / max(l2_norm_coeffs(space, image), 1e-30)
        report.errors.append(err)
        log.debug("picard %d: err %.3e", k + 1, err)
        if err < tol:
            u = Solution(space, image)
            report.converged = True
            break
        if anderson > 0:
            xs.append(u.coeffs.copy())
            fs.append(image)
            del xs[:-anderson - 1], fs[:-anderson - 1]
            new = _anderson_step(xs, fs) if len(xs) > 1 else image
        else:
            new = image
        if relaxation < 1:
            new = relaxation * new + (1 - relaxation) * u.coeffs
        u = Solution(space, new)
    report.solution = u
    return report
