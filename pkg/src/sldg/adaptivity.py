"""Gradient-driven marking, refinement and solution transfer."""
from __future__ import annotations

import math

import numpy as np

from .dgspace import DgSpace, Solution, make_space
from .mesh import Mesh, refine
from .refspace import basis_eval, triangle_rule


class LineageError(ValueError):
    pass


def indicator(sol: Solution, volume_degree: int | None = None) -> np.ndarray:
    """eta_T = h_T * max |grad u_h| over the element's volume quadrature points."""
    sp = sol.space
    rule = triangle_rule(volume_degree) if volume_degree else sp.volume_rule()
    _, g = sol.at_reference_points(rule.points)
    return sp.mesh.h * np.max(np.linalg.norm(g, axis=-1), axis=1)


def mark(etas, theta: float) -> set[int]:
    """The ceil(theta * N) largest indicators; ties go to the lower id."""
    if not 0.0 <= theta <= 1.0:
        raise ValueError(f"theta must lie in [0, 1], got {theta}")
    etas = np.asarray(etas, dtype=float)
    k = math.ceil(theta * etas.size - 1e-12)
    if k <= 0:
        return set()
    order = np.lexsort((np.arange(etas.size), -etas))
    return {int(i) for i in order[:k]}


def transfer(sol: Solution, new_space: DgSpace) -> Solution:
    """Exact L2 projection of the parent polynomials onto the child elements."""
    old = sol.space.mesh
    new = new_space.mesh
    if new.parent_uid != old.uid:
        raise LineageError("target mesh was not refined from the solution's mesh")
    par = new.parent
    if np.any(new_space.degrees < sol.space.degrees[par]):
        raise LineageError("transfer requires degrees preserved or raised")
    nmax = max(new_space.n_max, sol.space.n_max)
    rule = triangle_rule(min(2 * nmax + 1, 20))
    x = new.to_physical(np.arange(new.n_elements)[:, None], rule.points[None, :, :])
    ref_parent = old.to_reference(par[:, None], x)
    ref_parent = np.clip(ref_parent, 0.0, 1.0)
    nq = rule.points.shape[0]
    c_old = sol.space.padded(sol.coeffs)[par]
    phi_old = basis_eval(sol.space.n_max, ref_parent.reshape(-1, 2)).reshape(new.n_elements, nq, -1)
    vals = np.einsum("en,eqn->eq", c_old, phi_old)
    phi_new = basis_eval(new_space.n_max, rule.points)
    table = (vals * rule.weights) @ phi_new
    return Solution(new_space, new_space.unpad(table))


def refine_step(sol: Solution, theta: float) -> tuple[Mesh, set[int]]:
    etas = indicator(sol)
    marked = mark(etas, theta)
    return refine(sol.space.mesh, marked), marked


def inherit_degrees(space: DgSpace, new_mesh: Mesh) -> DgSpace:
    return make_space(new_mesh, space.degrees[new_mesh.parent], space.rho)
