"""Broken polynomial spaces with per-element degrees."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np

from . import kernels
from .mesh import Mesh
from .refspace import basis_eval, basis_grad, default_volume_degree, n_modes, triangle_rule

DEGREE_RATIO = 2.0


class SpaceError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class DgSpace:
    mesh: Mesh
    degrees: np.ndarray
    rho: float = DEGREE_RATIO
    offsets: np.ndarray = field(init=False)
    total_dofs: int = field(init=False)

    def __post_init__(self):
        deg = np.asarray(self.degrees, dtype=np.int64)
        if deg.shape != (self.mesh.n_elements,):
            raise SpaceError("one degree per element is required")
        if np.any(deg < 1):
            raise SpaceError("degrees must be >= 1")
        f = self.mesh.faces
        inter = np.flatnonzero(f.minus >= 0)
        ratio = deg[f.plus[inter]] / deg[f.minus[inter]]
        bad = np.flatnonzero((ratio > self.rho) | (ratio < 1.0 / self.rho))
        if bad.size:
            k = inter[bad[0]]
            raise SpaceError(
                f"degree ratio across face {k} (elements {f.plus[k]}, {f.minus[k]}: "
                f"{deg[f.plus[k]]} vs {deg[f.minus[k]]}) exceeds {self.rho}")
        deg.setflags(write=False)
        sizes = (deg + 1) * (deg + 2) // 2
        offsets = np.concatenate([[0], np.cumsum(sizes)])
        object.__setattr__(self, "degrees", deg)
        object.__setattr__(self, "offsets", offsets)
        object.__setattr__(self, "total_dofs", int(offsets[-1]))

    @property
    def n_max(self) -> int:
        return int(self.degrees.max())

    @property
    def sizes(self) -> np.ndarray:
        return np.diff(self.offsets)

    @property
    def dof_map(self) -> np.ndarray:
        """(Ne, N_max) global indices, -1 beyond an element's own modes."""
        nm = n_modes(self.n_max)
        local = np.arange(nm)
        idx = self.offsets[:-1, None] + local[None, :]
        return np.where(local[None, :] < self.sizes[:, None], idx, -1)

    def padded(self, coeffs: np.ndarray) -> np.ndarray:
        """Coefficient vector -> (Ne, N_max) with zeros for missing modes."""
        dm = self.dof_map
        out = np.zeros(dm.shape)
        mask = dm >= 0
        out[mask] = coeffs[dm[mask]]
        return out

    def unpad(self, table: np.ndarray) -> np.ndarray:
        dm = self.dof_map
        mask = dm >= 0
        out = np.empty(self.total_dofs)
        out[dm[mask]] = table[mask]
        return out

    def volume_rule(self, extra: int = 0):
        return triangle_rule(min(default_volume_degree(self.n_max) + extra, 20))


def make_space(mesh: Mesh, degree_rule: int | Mapping[int, int] | np.ndarray,
               rho: float = DEGREE_RATIO) -> DgSpace:
    """Uniform degree (int), per-element array, or {element: degree} map.

    Elements missing from a map default to the smallest mapped degree.
    """
    if isinstance(degree_rule, (int, np.integer)):
        degrees = np.full(mesh.n_elements, int(degree_rule))
    elif isinstance(degree_rule, Mapping):
        base = min(degree_rule.values())
        degrees = np.full(mesh.n_elements, base)
        for k, d in degree_rule.items():
            degrees[int(k)] = d
    else:
        degrees = np.asarray(degree_rule)
    return DgSpace(mesh, degrees, rho)


@dataclass(eq=False)
class Solution:
    space: DgSpace
    coeffs: np.ndarray

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=float)
        if self.coeffs.shape != (self.space.total_dofs,):
            raise SpaceError(
                f"coefficient vector has length {self.coeffs.shape}, "
                f"space has {self.space.total_dofs} dofs")

    @classmethod
    def zeros(cls, space: DgSpace) -> "Solution":
        return cls(space, np.zeros(space.total_dofs))

    def copy(self) -> "Solution":
        return Solution(self.space, self.coeffs.copy())

    def at_reference_points(self, ref_points: np.ndarray):
        """Values (Ne, nq) and physical gradients (Ne, nq, 2) at shared points."""
        sp = self.space
        c = sp.padded(self.coeffs)
        phi = basis_eval(sp.n_max, ref_points)
        dphi = np.ascontiguousarray(basis_grad(sp.n_max, ref_points))
        vals = c @ phi.T
        inv_jt = np.ascontiguousarray(sp.mesh.inv_jac.transpose(0, 2, 1))
        grads = kernels.physical_grad(np.ascontiguousarray(c), dphi, inv_jt)
        return vals, grads

    def at_element_points(self, elems: np.ndarray, ref: np.ndarray):
        """Values and gradients at one reference point per entry of ``elems``."""
        sp = self.space
        elems = np.asarray(elems)
        c = sp.padded(self.coeffs)[elems]
        phi = basis_eval(sp.n_max, ref)
        dphi = basis_grad(sp.n_max, ref)
        vals = np.einsum("kn,kn->k", c, phi)
        gref = np.einsum("kn,kna->ka", c, dphi)
        grads = np.einsum("kba,kb->ka", sp.mesh.inv_jac[elems], gref)
        return vals, grads


def eval(sol: Solution, element: int, ref_point) -> tuple[float, np.ndarray]:  # noqa: A001
    """Value and physical gradient of ``sol`` on one element."""
    if not 0 <= element < sol.space.mesh.n_elements:
        raise SpaceError(f"element id {element} out of range")
    v, g = sol.at_element_points(np.array([element]), np.atleast_2d(ref_point))
    return float(v[0]), g[0]


def project(f: Callable[[np.ndarray], np.ndarray], space: DgSpace, extra_degree: int = 0) -> Solution:
    """Element-local L2 projection (mass matrix is |det J| times identity)."""
    rule = space.volume_rule(extra_degree)
    mesh = space.mesh
    phi = basis_eval(space.n_max, rule.points)
    x = mesh.to_physical(np.arange(mesh.n_elements)[:, None], rule.points[None, :, :])
    fx = np.asarray(f(x), dtype=float).reshape(mesh.n_elements, -1)
    table = (fx * rule.weights) @ phi
    return Solution(space, space.unpad(table))
