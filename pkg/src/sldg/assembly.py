"""Symmetric interior-penalty assembly of the frozen-coefficient system.

For a frozen state ``w`` with ``G_w = G(|grad w|)`` the bilinear form is

    a(u, v) =   sum_T  int_T G_w grad u . grad v
              - sum_Fint int_F {G_w grad u . n} [v] + {G_w grad v . n} [u]
              + sum_F    int_F pen_F [u] [v]

with ``pen_F = sigma * n_F**2 / |F|**gamma``.  On boundary and crack faces
``[v]`` is the trace.  With ``DgParams.boundary_flux`` the consistency
terms are also applied on boundary and crack faces (usual SIPG Dirichlet
treatment); without it Dirichlet data enters through the penalty only.
"""
from __future__ import annotations

import weakref
from dataclasses import dataclass
from typing import Callable, Mapping

import numpy as np
import scipy.sparse as sp

from . import kernels
from .constitutive import ModelParams, coeff_G
from .dgspace import DgSpace, Solution
from .mesh import INTERIOR, TAGS
from .refspace import (basis_eval, basis_grad, default_edge_points, default_volume_degree,
                       edge_rule, triangle_rule)

PointFn = Callable[[np.ndarray], np.ndarray]


class AssemblyError(ValueError):
    pass


@dataclass(frozen=True)
class DgParams:
    sigma: float = 100.0
    gamma: float = 1.0
    volume_degree: int | None = None
    edge_points: int | None = None
    boundary_flux: bool = True

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError(f"sigma must be > 0, got {self.sigma}")
        if not self.gamma >= 1:
            raise ValueError(f"gamma must be >= 1, got {self.gamma}")


@dataclass(frozen=True)
class BoundaryData:
    """Dirichlet data ``g`` (one function, or one per boundary tag) and source ``f``."""

    g: PointFn | Mapping[str, PointFn] | None = None
    f: PointFn | None = None

    def g_values(self, x: np.ndarray, tags: np.ndarray) -> np.ndarray:
        """``x``: (Nf, nq, 2); ``tags``: (Nf,) tag indices."""
        if self.g is None:
            return np.zeros(x.shape[:-1])
        if callable(self.g):
            return np.asarray(self.g(x), dtype=float).reshape(x.shape[:-1])
        out = np.zeros(x.shape[:-1])
        for t, name in enumerate(TAGS):
            sel = tags == t
            if not sel.any():
                continue
            fn = self.g.get(name)
            if fn is None:
                raise AssemblyError(f"no Dirichlet data for boundary tag {name!r}")
            out[sel] = np.asarray(fn(x[sel]), dtype=float).reshape(out[sel].shape)
        return out


@dataclass(frozen=True)
class SparseSystem:
    matrix: sp.csr_matrix
    rhs: np.ndarray

    @property
    def dim(self) -> int:
        return self.rhs.shape[0]


def penalty_weight_values(n_plus, n_minus, length, sigma, gamma):
    n_plus = np.asarray(n_plus, dtype=float)
    n_minus = np.asarray(n_minus, dtype=float)
    nf = np.where(n_minus > 0, 0.5 * (n_plus + n_minus), n_plus)
    return sigma * nf**2 / np.asarray(length, dtype=float) ** gamma


def penalty_weight(face, space: DgSpace, dg: DgParams) -> float:
    """Penalty coefficient of one face (a ``mesh.Face`` or a face index)."""
    if not hasattr(face, "plus"):
        face = space.mesh.face(int(face))
    n_p = space.degrees[face.plus]
    n_m = space.degrees[face.minus] if face.minus is not None else 0
    return float(penalty_weight_values(n_p, n_m, face.length, dg.sigma, dg.gamma))


class Geometry:
    """Basis tables and mapped quadrature for one space and rule choice."""

    def __init__(self, space: DgSpace, volume_degree: int, edge_points: int):
        mesh = space.mesh
        nm = space.n_max
        self.space = space
        self.dof_map = space.dof_map
        # volume
        rule = triangle_rule(volume_degree)
        self.vol_rule = rule
        self.phi = basis_eval(nm, rule.points)
        self.dref = np.ascontiguousarray(basis_grad(nm, rule.points))
        inv = mesh.inv_jac
        self.metric = np.ascontiguousarray(np.einsum("eak,ebk->eab", inv, inv))
        self.inv_jt = np.ascontiguousarray(inv.transpose(0, 2, 1))
        self.wdet = np.outer(mesh.det, rule.weights)
        ne = mesh.n_elements
        self.x_vol = mesh.to_physical(np.arange(ne)[:, None], rule.points[None, :, :])
        # faces
        f = mesh.faces
        er = edge_rule(edge_points)
        t = er.points
        self.faces = f
        self.x_face = f.p0[:, None, :] + t[None, :, None] * (f.p1 - f.p0)[:, None, :]
        self.w_face = np.outer(f.length, er.weights)
        self.n_plus, self.n_minus = space.degrees[f.plus], space.degrees[np.maximum(f.minus, 0)]
        self.interior = np.flatnonzero(f.kind == INTERIOR)
        self.boundary = np.flatnonzero(f.kind != INTERIOR)
        self.plus = self._side(f.plus[self.interior], self.interior)
        self.minus = self._side(f.minus[self.interior], self.interior)
        self.bnd = self._side(f.plus[self.boundary], self.boundary)

    def _side(self, elems, faces):
        mesh, nm = self.space.mesh, self.space.n_max
        nq = self.x_face.shape[1]
        x = self.x_face[faces]
        ref = mesh.to_reference(np.repeat(elems, nq), x.reshape(-1, 2))
        ref = np.clip(ref, 0.0, 1.0)
        over = ref.sum(axis=1) - 1.0
        ref[over > 0] -= 0.5 * over[over > 0, None]
        phi = basis_eval(nm, ref).reshape(len(faces), nq, -1)
        dref = basis_grad(nm, ref).reshape(len(faces), nq, -1, 2)
        normal = self.faces.normal[faces]
        # grad phi . n = dref . (J^-1 n)
        jn = np.einsum("fab,fb->fa", self.space.mesh.inv_jac[elems], normal)
        dn = np.einsum("fqna,fa->fqn", dref, jn)
        return {"elems": elems, "faces": faces, "phi": phi, "dn": dn, "dref": dref}

    def penalty(self, dg: DgParams) -> np.ndarray:
        f = self.faces
        return penalty_weight_values(self.n_plus, np.where(f.minus >= 0, self.n_minus, 0),
                                     f.length, dg.sigma, dg.gamma)

    # -- frozen coefficient ------------------------------------------------
    def coeff_volume(self, frozen: Solution | None, p: ModelParams) -> np.ndarray:
        if frozen is None or p.linear:
            return np.full(self.wdet.shape, coeff_G(0.0, p))
        c = np.ascontiguousarray(self.space.padded(frozen.coeffs))
        g = kernels.physical_grad(c, self.dref, self.inv_jt)
        return coeff_G(np.linalg.norm(g, axis=-1), p)

    def side_grad(self, side, coeffs_padded) -> np.ndarray:
        """Physical gradients of an expansion at one side's face points."""
        c = coeffs_padded[side["elems"]]
        gref = np.einsum("fn,fqna->fqa", c, side["dref"])
        inv = self.space.mesh.inv_jac[side["elems"]]
        return np.einsum("fba,fqb->fqa", inv, gref)

    def side_values(self, side, coeffs_padded) -> np.ndarray:
        return np.einsum("fn,fqn->fq", coeffs_padded[side["elems"]], side["phi"])

    def coeff_side(self, side, frozen: Solution | None, p: ModelParams) -> np.ndarray:
        shape = side["phi"].shape[:2]
        if frozen is None or p.linear:
            return np.full(shape, coeff_G(0.0, p))
        c = self.space.padded(frozen.coeffs)
        return coeff_G(np.linalg.norm(self.side_grad(side, c), axis=-1), p)


_cache: "weakref.WeakKeyDictionary[DgSpace, dict]" = weakref.WeakKeyDictionary()


def geometry(space: DgSpace, dg: DgParams, extra_degree: int = 0) -> Geometry:
    qv = min((dg.volume_degree or default_volume_degree(space.n_max)) + extra_degree, 20)
    qe = min((dg.edge_points or default_edge_points(space.n_max)) + (extra_degree + 1) // 2, 20)
    per = _cache.setdefault(space, {})
    key = (qv, qe)
    if key not in per:
        per[key] = Geometry(space, qv, qe)
    return per[key]


def _scatter(rows_map, cols_map, blocks, rows, cols, vals):
    r = np.broadcast_to(rows_map[:, :, None], blocks.shape)
    c = np.broadcast_to(cols_map[:, None, :], blocks.shape)
    ok = (r >= 0) & (c >= 0)
    rows.append(r[ok])
    cols.append(c[ok])
    vals.append(blocks[ok])


def assemble(space: DgSpace, frozen: Solution | None, p: ModelParams, dg: DgParams,
             bd: BoundaryData, with_rhs: bool = True) -> SparseSystem:
    if frozen is not None and frozen.space is not space:
        raise AssemblyError("frozen solution lives on a different space")
    geo = geometry(space, dg)
    dm = geo.dof_map
    pen = geo.penalty(dg)
    rows, cols, vals = [], [], []

    # volume
    G = geo.coeff_volume(frozen, p)
    K = kernels.stiffness(geo.dref, geo.metric, np.ascontiguousarray(geo.wdet * G))
    _scatter(dm, dm, K, rows, cols, vals)

    # interior faces
    inter = geo.interior
    P, M, B = geo.plus, geo.minus, geo.bnd
    w = geo.w_face[inter]
    pw = w * pen[inter, None]
    sides = ((P, geo.coeff_side(P, frozen, p), 1.0), (M, geo.coeff_side(M, frozen, p), -1.0))
    for t, G_t, s_t in sides:
        for s, G_s, s_s in sides:
            blk = (-0.5 * s_t * kernels.pair_products(t["phi"], G_s[:, :, None] * s["dn"], w)
                   - 0.5 * s_s * kernels.pair_products(G_t[:, :, None] * t["dn"], s["phi"], w)
                   + s_t * s_s * kernels.pair_products(t["phi"], s["phi"], pw))
            _scatter(dm[t["elems"]], dm[s["elems"]], blk, rows, cols, vals)

    # boundary and crack faces
    bnd = geo.boundary
    wb = geo.w_face[bnd]
    pwb = wb * pen[bnd, None]
    blk = kernels.pair_products(B["phi"], B["phi"], pwb)
    if dg.boundary_flux:
        gdn_b = geo.coeff_side(B, frozen, p)[:, :, None] * B["dn"]
        blk = (blk - kernels.pair_products(B["phi"], gdn_b, wb)
               - kernels.pair_products(gdn_b, B["phi"], wb))
    _scatter(dm[B["elems"]], dm[B["elems"]], blk, rows, cols, vals)

    n = space.total_dofs
    A = sp.coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                      shape=(n, n)).tocsr()
    A.sum_duplicates()

    b = np.zeros(n)
    if with_rhs:
        if bd.f is not None:
            fx = np.asarray(bd.f(geo.x_vol), dtype=float).reshape(geo.wdet.shape)
            tab = (geo.wdet * fx) @ geo.phi
            _add_table(b, dm, tab)
        gx = bd.g_values(geo.x_face[bnd], geo.faces.tag[bnd])
        tab = np.einsum("fq,fqn->fn", pwb * gx, B["phi"])
        if dg.boundary_flux:
            tab -= np.einsum("fq,fqn->fn", wb * gx, gdn_b)
        _add_table(b, dm[B["elems"]], tab)
    return SparseSystem(A, b)


def _add_table(b, dm, tab):
    ok = dm >= 0
    np.add.at(b, dm[ok], tab[ok])


def nonlinear_form(space: DgSpace, u: Solution, v: np.ndarray, p: ModelParams,
                   dg: DgParams) -> float:
    """A_h(u; u, v) evaluated by assembling with the coefficient frozen at u."""
    sys = assemble(space, u, p, dg, BoundaryData(), with_rhs=False)
    return float(np.asarray(v) @ (sys.matrix @ u.coeffs))


def energy_norm(space: DgSpace, dg: DgParams, sol: Solution | None = None,
                exact: Callable | None = None, g: PointFn | None = None,
                extra_degree: int = 0) -> float:
    """Broken energy norm of ``sol - exact``.

    ``exact(x)`` returns ``(value, gradient)``.  Boundary jumps are the
    trace of ``sol`` minus ``g`` (or minus the exact value if no ``g``).
    """
    geo = geometry(space, dg, extra_degree)
    pen = geo.penalty(dg)
    c = space.padded(sol.coeffs) if sol is not None else np.zeros(geo.dof_map.shape)
    grad = kernels.physical_grad(np.ascontiguousarray(c), geo.dref, geo.inv_jt)
    if exact is not None:
        grad = grad - exact(geo.x_vol)[1]
    vol = float(np.sum(geo.wdet * np.sum(grad**2, axis=-1)))

    inter = geo.interior
    jump_i = geo.side_values(geo.plus, c) - geo.side_values(geo.minus, c)
    face = float(np.sum(pen[inter, None] * geo.w_face[inter] * jump_i**2))

    bnd = geo.boundary
    tr = geo.side_values(geo.bnd, c)
    xb = geo.x_face[bnd]
    if g is not None:
        tr = tr - np.asarray(g(xb), dtype=float).reshape(tr.shape)
    elif exact is not None:
        tr = tr - exact(xb)[0]
    face += float(np.sum(pen[bnd, None] * geo.w_face[bnd] * tr**2))
    return float(np.sqrt(vol + face))


def jump_values(space: DgSpace, sol: Solution, dg: DgParams | None = None) -> np.ndarray:
    """Jumps of ``sol`` at interior-face quadrature points, (Nint, nq)."""
    geo = geometry(space, dg or DgParams())
    c = space.padded(sol.coeffs)
    return geo.side_values(geo.plus, c) - geo.side_values(geo.minus, c)
