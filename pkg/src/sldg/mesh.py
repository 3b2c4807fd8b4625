"""1-irregular triangular meshes of the unit square with an optional slit.

Elements are red-refined (split into four similar children through the
edge midpoints).  A face is an element edge shared by two elements, or a
single element edge on the outer boundary or on the crack.  Where a
coarse edge carries a hanging node the faces are the two FINE edges, each
paired with the coarse element.

Orientation: on conforming interior faces ``plus > minus``; on hanging
faces ``plus`` is the fine element.  The stored normal is the outward
normal of ``plus``.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np

INTERIOR, BOUNDARY, CRACK = 0, 1, 2
KIND_NAMES = {INTERIOR: "interior", BOUNDARY: "boundary", CRACK: "crack"}
TAGS = ("left", "right", "bottom", "top", "crack")
TAG_LEFT, TAG_RIGHT, TAG_BOTTOM, TAG_TOP, TAG_CRACK = range(5)

_GEOM_TOL = 1e-12
_uid = itertools.count()


class MeshError(ValueError):
    pass


@dataclass(frozen=True)
class Face:
    index: int
    kind: str
    tag: str | None
    plus: int
    minus: int | None
    p0: np.ndarray
    p1: np.ndarray
    length: float
    normal: np.ndarray
    hanging: bool


@dataclass(frozen=True)
class FaceArrays:
    """Struct-of-arrays face table used by the vectorised assembly."""

    kind: np.ndarray      # int8, INTERIOR/BOUNDARY/CRACK
    tag: np.ndarray       # int8, index into TAGS or -1
    plus: np.ndarray
    minus: np.ndarray     # -1 on boundary and crack faces
    p0: np.ndarray
    p1: np.ndarray
    length: np.ndarray
    normal: np.ndarray
    hanging: np.ndarray

    def __len__(self):
        return self.kind.shape[0]

    @property
    def interior(self) -> np.ndarray:
        return self.kind == INTERIOR


@dataclass(frozen=True, eq=False)
class FaceFrame:
    """Arc-length parametrisation of a face with both sides' reference maps."""

    p0: np.ndarray
    p1: np.ndarray
    _mesh: "Mesh" = field(repr=False)
    plus: int
    minus: int | None

    def point(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)[..., None]
        return self.p0 + t * (self.p1 - self.p0)

    def plus_ref(self, t) -> np.ndarray:
        x = np.atleast_2d(self.point(t))
        return self._mesh.to_reference(np.full(x.shape[0], self.plus), x)

    def minus_ref(self, t) -> np.ndarray | None:
        if self.minus is None:
            return None
        x = np.atleast_2d(self.point(t))
        return self._mesh.to_reference(np.full(x.shape[0], self.minus), x)


@dataclass(frozen=True, eq=False)
class Mesh:
    vertices: np.ndarray
    elements: np.ndarray
    level: np.ndarray
    parent: np.ndarray
    crack: tuple[tuple[float, float], tuple[float, float]] | None = None
    midpoints: Mapping[tuple[int, int], int] = field(default_factory=dict, repr=False)
    parent_uid: int | None = None
    uid: int = field(default_factory=lambda: next(_uid))
    faces: FaceArrays = field(init=False, repr=False)

    def __post_init__(self):
        v = np.ascontiguousarray(self.vertices, dtype=float)
        e = np.ascontiguousarray(self.elements, dtype=np.int64)
        for arr in (v, e):
            arr.setflags(write=False)
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "elements", e)
        object.__setattr__(self, "level", np.asarray(self.level, dtype=np.int64))
        object.__setattr__(self, "parent", np.asarray(self.parent, dtype=np.int64))
        x0 = v[e[:, 0]]
        jac = np.stack([v[e[:, 1]] - x0, v[e[:, 2]] - x0], axis=2)
        det = jac[:, 0, 0] * jac[:, 1, 1] - jac[:, 0, 1] * jac[:, 1, 0]
        if np.any(det <= 0):
            bad = int(np.argmax(det <= 0))
            raise MeshError(f"element {bad} is degenerate or clockwise")
        inv = np.empty_like(jac)
        inv[:, 0, 0] = jac[:, 1, 1] / det
        inv[:, 1, 1] = jac[:, 0, 0] / det
        inv[:, 0, 1] = -jac[:, 0, 1] / det
        inv[:, 1, 0] = -jac[:, 1, 0] / det
        object.__setattr__(self, "_origin", x0)
        object.__setattr__(self, "jac", jac)
        object.__setattr__(self, "det", det)
        object.__setattr__(self, "inv_jac", inv)
        edges = [np.linalg.norm(v[e[:, (k + 1) % 3]] - v[e[:, k]], axis=1) for k in range(3)]
        object.__setattr__(self, "h", np.max(np.stack(edges, axis=1), axis=1))
        object.__setattr__(self, "faces", _build_faces(self))

    # -- basic geometry -------------------------------------------------
    @property
    def n_elements(self) -> int:
        return self.elements.shape[0]

    @property
    def n_vertices(self) -> int:
        return self.vertices.shape[0]

    @property
    def area(self) -> np.ndarray:
        return 0.5 * self.det

    @property
    def centroids(self) -> np.ndarray:
        return self.vertices[self.elements].mean(axis=1)

    def to_physical(self, elems, ref) -> np.ndarray:
        elems = np.asarray(elems)
        return self._origin[elems] + np.einsum("...ab,...b->...a", self.jac[elems], ref)

    def to_reference(self, elems, x) -> np.ndarray:
        elems = np.asarray(elems)
        return np.einsum("...ab,...b->...a", self.inv_jac[elems], x - self._origin[elems])

    def face(self, i: int) -> Face:
        f = self.faces
        minus = int(f.minus[i])
        tag = int(f.tag[i])
        return Face(
            index=i, kind=KIND_NAMES[int(f.kind[i])], tag=TAGS[tag] if tag >= 0 else None,
            plus=int(f.plus[i]), minus=minus if minus >= 0 else None,
            p0=f.p0[i].copy(), p1=f.p1[i].copy(), length=float(f.length[i]),
            normal=f.normal[i].copy(), hanging=bool(f.hanging[i]),
        )

    def face_quadrature_frame(self, face: Face | int) -> FaceFrame:
        if not isinstance(face, Face):
            face = self.face(int(face))
        return FaceFrame(face.p0, face.p1, self, face.plus, face.minus)

    def locate(self, points, tol: float = 1e-12) -> np.ndarray:
        """Owning element of each point; the lowest id among closures wins."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        out = np.full(pts.shape[0], -1, dtype=np.int64)
        for k, p in enumerate(pts):
            ref = np.einsum("eab,eb->ea", self.inv_jac, p - self._origin)
            inside = (ref[:, 0] >= -tol) & (ref[:, 1] >= -tol) & (ref.sum(axis=1) <= 1 + tol)
            hits = np.flatnonzero(inside)
            if hits.size:
                out[k] = hits[0]
        return out

    def permuted(self, perm) -> "Mesh":
        """Same mesh with elements renumbered: new element k is old ``perm[k]``."""
        perm = np.asarray(perm)
        return Mesh(self.vertices, self.elements[perm], self.level[perm],
                    np.full(perm.shape[0], -1), self.crack, dict(self.midpoints))


# -- construction -------------------------------------------------------
def _validate_crack(n: int, crack):
    (x0, y0), (x1, y1) = crack
    if abs(y0 - y1) > _GEOM_TOL:
        raise MeshError("crack must be horizontal (y0 == y1)")
    if x1 < x0:
        x0, x1 = x1, x0
    if not (0.0 <= x0 < x1 <= 1.0) or not (0.0 < y0 < 1.0):
        raise MeshError(f"crack {crack} must lie inside the unit square")
    for val, name in ((y0, "y"), (x0, "x0"), (x1, "x1")):
        k = val * n
        if abs(k - round(k)) > 1e-9:
            raise MeshError(
                f"crack coordinate {name}={val} is not on a mesh line of the {n}x{n} grid")
    return (float(x0), float(y0)), (float(x1), float(y0))


def build_uniform(n: int, crack=None) -> Mesh:
    """Structured mesh: ``n x n`` squares, each cut along its (1, 1) diagonal."""
    if int(n) != n or n < 1:
        raise MeshError(f"cells per side must be a positive integer, got {n}")
    n = int(n)
    xs = np.linspace(0.0, 1.0, n + 1)
    X, Y = np.meshgrid(xs, xs, indexing="xy")
    verts = np.column_stack([X.ravel(), Y.ravel()])

    def vid(i, j):
        return j * (n + 1) + i

    i, j = np.meshgrid(np.arange(n), np.arange(n), indexing="xy")
    i, j = i.ravel(), j.ravel()
    v00, v10, v11, v01 = vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1)
    lower = np.column_stack([v00, v10, v11])
    upper = np.column_stack([v00, v11, v01])
    elems = np.empty((2 * n * n, 3), dtype=np.int64)
    elems[0::2] = lower
    elems[1::2] = upper

    if crack is not None:
        (cx0, cy), (cx1, _) = crack = _validate_crack(n, crack)
        jc = int(round(cy * n))
        on_crack = [vid(ii, jc) for ii in range(n + 1)
                    if cx0 + _GEOM_TOL < xs[ii] < cx1 - _GEOM_TOL]
        dup = {}
        extra = []
        for v in on_crack:
            dup[v] = verts.shape[0] + len(extra)
            extra.append(verts[v])
        if extra:
            verts = np.vstack([verts, np.array(extra)])
        cent_y = verts[elems].mean(axis=1)[:, 1]
        above = cent_y > cy
        for e in np.flatnonzero(above):
            for k in range(3):
                v = elems[e, k]
                if v in dup:
                    elems[e, k] = dup[v]
    m = elems.shape[0]
    return Mesh(verts, elems, np.zeros(m, dtype=np.int64), np.full(m, -1, dtype=np.int64),
                crack, {})


def _edge_key(a: int, b: int) -> tuple[int, int]:
    return (a, b) if a < b else (b, a)


def _build_faces(mesh: Mesh) -> FaceArrays:
    v, e = mesh.vertices, mesh.elements
    ne = e.shape[0]
    a = e.reshape(-1)
    b = e[:, [1, 2, 0]].reshape(-1)
    owner = np.repeat(np.arange(ne), 3)
    lo, hi = np.minimum(a, b), np.maximum(a, b)
    keys = lo * (v.shape[0] + 1) + hi
    order = np.argsort(keys, kind="stable")
    sk = keys[order]
    starts = np.flatnonzero(np.r_[True, sk[1:] != sk[:-1]])
    counts = np.diff(np.r_[starts, sk.size])
    if np.any(counts > 2):
        raise MeshError("an edge is shared by more than two elements")

    # map single-owner edges by vertex pair for hanging detection
    single = {}
    for s in starts[counts == 1]:
        k = order[s]
        single[(int(lo[k]), int(hi[k]))] = k

    plus, minus, ea, eb, hanging = [], [], [], [], []
    for s in starts[counts == 2]:
        k1, k2 = order[s], order[s + 1]
        o1, o2 = owner[k1], owner[k2]
        kp = k1 if o1 > o2 else k2
        plus.append(max(o1, o2))
        minus.append(min(o1, o2))
        ea.append(a[kp])
        eb.append(b[kp])
        hanging.append(False)

    consumed = set()
    for key, k in single.items():
        m = mesh.midpoints.get(key)
        if m is None:
            continue
        halves = [_edge_key(key[0], m), _edge_key(m, key[1])]
        if all(h in single for h in halves):
            consumed.add(key)
            for h in halves:
                kf = single[h]
                consumed.add(h)
                plus.append(owner[kf])
                minus.append(owner[k])
                ea.append(a[kf])
                eb.append(b[kf])
                hanging.append(True)

    bnd = sorted((k for key, k in single.items() if key not in consumed))
    for k in bnd:
        plus.append(owner[k])
        minus.append(-1)
        ea.append(a[k])
        eb.append(b[k])
        hanging.append(False)

    plus = np.asarray(plus, dtype=np.int64)
    minus = np.asarray(minus, dtype=np.int64)
    p0 = v[np.asarray(ea, dtype=np.int64)]
    p1 = v[np.asarray(eb, dtype=np.int64)]
    d = p1 - p0
    length = np.linalg.norm(d, axis=1)
    normal = np.column_stack([d[:, 1], -d[:, 0]]) / length[:, None]
    kind = np.where(minus >= 0, INTERIOR, BOUNDARY).astype(np.int8)
    tag = np.full(plus.shape[0], -1, dtype=np.int8)
    mid = 0.5 * (p0 + p1)
    for f in np.flatnonzero(minus < 0):
        tag[f] = _boundary_tag(mid[f], normal[f], mesh.crack)
    kind[tag == TAG_CRACK] = CRACK
    arrays = [kind, tag, plus, minus, p0, p1, length, normal, np.asarray(hanging)]
    for arr in arrays:
        arr.setflags(write=False)
    return FaceArrays(*arrays)


def _boundary_tag(mid, normal, crack) -> int:
    x, y = mid
    if abs(x) < _GEOM_TOL:
        return TAG_LEFT
    if abs(x - 1.0) < _GEOM_TOL:
        return TAG_RIGHT
    if abs(y) < _GEOM_TOL:
        return TAG_BOTTOM
    if abs(y - 1.0) < _GEOM_TOL:
        return TAG_TOP
    if crack is not None:
        (cx0, cy), (cx1, _) = crack
        if abs(y - cy) < _GEOM_TOL and cx0 - _GEOM_TOL <= x <= cx1 + _GEOM_TOL:
            return TAG_CRACK
    raise MeshError(f"unmatched element edge at {mid}: mesh is not 1-irregular or not closed")


# -- refinement ---------------------------------------------------------
def _edge_owners(elements: np.ndarray) -> dict[tuple[int, int], list[int]]:
    owners: dict[tuple[int, int], list[int]] = {}
    for el, tri in enumerate(elements.tolist()):
        for k in range(3):
            owners.setdefault(_edge_key(tri[k], tri[(k + 1) % 3]), []).append(el)
    return owners


def _closure(mesh: Mesh, marked: set[int]) -> set[int]:
    """Add coarser neighbours until refining keeps level jumps <= 1."""
    owners = _edge_owners(mesh.elements)
    parent_edge = {m: key for key, m in mesh.midpoints.items()}
    todo = sorted(marked)
    result = set(marked)
    elements = mesh.elements.tolist()
    while todo:
        el = todo.pop()
        tri = elements[el]
        for k in range(3):
            a, b = tri[k], tri[(k + 1) % 3]
            for end, mid in ((a, b), (b, a)):
                coarse = parent_edge.get(mid)
                if coarse is None or end not in coarse:
                    continue
                for c in owners.get(coarse, ()):
                    if c not in result:
                        result.add(c)
                        todo.append(c)
    return result


def refine(mesh: Mesh, marked: Iterable[int]) -> Mesh:
    """Red-refine the marked elements (plus closure) into a new mesh.

    ``parent[k]`` of the result is the index in ``mesh`` of the element
    that new element ``k`` came from (itself if it was not refined).
    """
    marked = {int(m) for m in marked}
    bad = [m for m in marked if not 0 <= m < mesh.n_elements]
    if bad:
        raise MeshError(f"invalid element ids {sorted(bad)[:5]}")
    if not marked:
        return Mesh(mesh.vertices, mesh.elements, mesh.level, np.arange(mesh.n_elements),
                    mesh.crack, dict(mesh.midpoints), parent_uid=mesh.uid)
    to_split = _closure(mesh, marked)
    verts = [tuple(p) for p in mesh.vertices.tolist()]
    midpoints = dict(mesh.midpoints)

    def mid(a, b):
        key = _edge_key(a, b)
        m = midpoints.get(key)
        if m is None:
            m = len(verts)
            pa, pb = verts[a], verts[b]
            verts.append((0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])))
            midpoints[key] = m
        return m

    elems, level, parent = [], [], []
    for el, tri in enumerate(mesh.elements.tolist()):
        lv = int(mesh.level[el])
        if el not in to_split:
            elems.append(tri)
            level.append(lv)
            parent.append(el)
            continue
        a, b, c = tri
        mab, mbc, mca = mid(a, b), mid(b, c), mid(c, a)
        for child in ((a, mab, mca), (mab, b, mbc), (mca, mbc, c), (mbc, mca, mab)):
            elems.append(child)
            level.append(lv + 1)
            parent.append(el)
    return Mesh(np.array(verts), np.array(elems, dtype=np.int64), np.array(level),
                np.array(parent), mesh.crack, midpoints, parent_uid=mesh.uid)


def refine_uniform(mesh: Mesh, times: int = 1) -> Mesh:
    for _ in range(times):
        mesh = refine(mesh, range(mesh.n_elements))
    return mesh


# -- invariant suite ----------------------------------------------------
def check_invariants(mesh: Mesh, delta: float = 4.0) -> list[str]:
    """Return a list of violated mesh invariants (empty when all hold)."""
    problems = []
    if np.any(mesh.det <= 0):
        problems.append("non-positive element area")
    total = float(mesh.area.sum())
    if abs(total - 1.0) > 1e-12:
        problems.append(f"element areas sum to {total!r}, expected 1")
    f = mesh.faces
    if np.any(f.length <= 0):
        problems.append("zero-length face")
    if np.any(np.abs(np.linalg.norm(f.normal, axis=1) - 1.0) > 1e-14):
        problems.append("non-unit face normal")
    inter = f.minus >= 0
    conf = inter & ~f.hanging
    if np.any(f.plus[conf] <= f.minus[conf]):
        problems.append("conforming face with plus id <= minus id")
    lv = mesh.level
    if np.any(np.abs(lv[f.plus[inter]] - lv[f.minus[inter]]) > 1):
        problems.append("level jump > 1 across a face (more than one hanging node)")
    if np.any(lv[f.plus[f.hanging]] != lv[f.minus[f.hanging]] + 1):
        problems.append("hanging face not owned by the finer element")
    ratio = mesh.h[f.plus[inter]] / mesh.h[f.minus[inter]]
    if inter.any() and (ratio.max() > delta or ratio.min() < 1.0 / delta):
        problems.append(f"local mesh-size ratio outside [1/{delta}, {delta}]")
    # every element edge is tiled exactly by faces
    perim = np.zeros(mesh.n_elements)
    np.add.at(perim, f.plus, f.length)
    np.add.at(perim, f.minus[inter], f.length[inter])
    v, e = mesh.vertices, mesh.elements
    true_perim = sum(np.linalg.norm(v[e[:, (k + 1) % 3]] - v[e[:, k]], axis=1) for k in range(3))
    if np.any(np.abs(perim - true_perim) > 1e-12):
        problems.append("element edges not covered by faces")
    # faces lie in both element closures
    for side in (f.plus, f.minus):
        sel = side >= 0
        for pt in (f.p0[sel], f.p1[sel]):
            ref = mesh.to_reference(side[sel], pt)
            if np.any(ref < -1e-10) or np.any(ref.sum(axis=1) > 1 + 1e-10):
                problems.append("face endpoint outside an adjacent element")
                break
    if mesh.crack is not None:
        (cx0, cy), (cx1, _) = mesh.crack
        ys = v[e][:, :, 1]
        xs = v[e][:, :, 0]
        straddle = (ys.min(axis=1) < cy - 1e-14) & (ys.max(axis=1) > cy + 1e-14)
        overlap = (xs.max(axis=1) > cx0 + 1e-14) & (xs.min(axis=1) < cx1 - 1e-14)
        if np.any(straddle & overlap):
            problems.append("element crosses the crack")
    return problems


