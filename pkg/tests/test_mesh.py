import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from sldg.mesh import (BOUNDARY, CRACK, INTERIOR, TAGS, MeshError, build_uniform,
                       check_invariants, refine, refine_uniform)

CRACK_SEG = ((0.5, 0.5), (1.0, 0.5))


def test_uniform_counts():
    m = build_uniform(4)
    assert m.n_elements == 32
    assert m.n_vertices == 25
    assert np.sum(m.faces.kind == BOUNDARY) == 16
    assert check_invariants(m) == []


def test_uniform_area():
    assert abs(build_uniform(2).area.sum() - 1.0) < 1e-14


@pytest.mark.parametrize("n", [0, -2, 2.5])
def test_bad_n(n):
    with pytest.raises(MeshError):
        build_uniform(n)


@pytest.mark.parametrize("crack", [((0.5, 0.5), (1.0, 0.6)), ((0.5, 0.51), (1.0, 0.51)),
                                   ((0.55, 0.5), (1.0, 0.5)), ((0.5, 1.5), (1.0, 1.5))])
def test_crack_rejected(crack):
    with pytest.raises(MeshError):
        build_uniform(10, crack)


def test_crack_faces_enumerated():
    m = build_uniform(30, CRACK_SEG)
    f = m.faces
    on_seg = ((np.abs(f.p0[:, 1] - 0.5) < 1e-14) & (np.abs(f.p1[:, 1] - 0.5) < 1e-14)
              & (np.minimum(f.p0[:, 0], f.p1[:, 0]) >= 0.5 - 1e-14))
    assert np.all(f.kind[on_seg] == CRACK)
    assert on_seg.sum() == 30
    assert np.sum(f.kind == CRACK) == 30
    # 15 from below (normal +y) and 15 from above (normal -y)
    crack = f.kind == CRACK
    assert np.sum(f.normal[crack, 1] > 0) == 15
    assert np.sum(f.normal[crack, 1] < 0) == 15
    assert np.all(f.tag[crack] == TAGS.index("crack"))
    assert m.n_vertices == 31 * 31 + 14
    assert check_invariants(m) == []


def test_boundary_length():
    for crack, total in ((None, 4.0), (CRACK_SEG, 5.0)):
        m = build_uniform(6, crack)
        b = m.faces.kind != INTERIOR
        assert abs(m.faces.length[b].sum() - total) < 1e-13


def test_refine_empty():
    m = build_uniform(3)
    r = refine(m, set())
    assert r.n_elements == m.n_elements
    assert np.array_equal(r.parent, np.arange(m.n_elements))


def test_refine_one_element_creates_hanging_faces():
    m = build_uniform(2)
    r = refine(m, {3})
    assert r.n_elements == m.n_elements + 3
    assert np.sum(r.parent == 3) == 4
    assert r.faces.hanging.any()
    assert check_invariants(r) == []


def test_refine_all_matches_uniform():
    n = 3
    r = refine(build_uniform(n), set(range(2 * n * n)))
    u = build_uniform(2 * n)
    assert r.n_elements == 8 * n * n
    key = lambda m: sorted(map(tuple, np.round(np.sort(m.vertices[m.elements].reshape(-1, 6), axis=1), 12)))  # noqa: E731
    assert key(r) == key(u)
    assert not r.faces.hanging.any()


def test_uniform_refinement_sequence():
    m = build_uniform(2)
    h = m.h.max()
    for k in range(1, 4):
        m = refine_uniform(m, 1)
        assert m.n_elements == 2 * (2 * 2**k) ** 2
        assert abs(m.h.max() - h / 2**k) < 1e-14


def test_invalid_ids():
    with pytest.raises((MeshError, IndexError, ValueError)):
        refine(build_uniform(2), {99})


@given(seed=st.integers(0, 10**6), steps=st.integers(1, 3), crack=st.booleans())
def test_random_refinement_invariants(seed, steps, crack):
    rng = np.random.default_rng(seed)
    m = build_uniform(4, CRACK_SEG if crack else None)
    for _ in range(steps):
        k = rng.integers(1, max(2, m.n_elements // 4))
        m = refine(m, set(rng.choice(m.n_elements, size=k, replace=False).tolist()))
    assert check_invariants(m) == []
    b = m.faces.kind != INTERIOR
    assert abs(m.faces.length[b].sum() - (5.0 if crack else 4.0)) < 1e-12
    assert abs(m.area.sum() - 1.0) < 1e-12


def test_frame_boundary_has_plus_only():
    m = build_uniform(2)
    i = int(np.flatnonzero(m.faces.kind == BOUNDARY)[0])
    fr = m.face_quadrature_frame(i)
    assert fr.minus_ref(0.5) is None
    assert fr.plus_ref([0.0, 1.0]).shape == (2, 2)


def test_frame_conforming_sides_agree():
    m = build_uniform(3)
    for i in np.flatnonzero(m.faces.kind == INTERIOR):
        fr = m.face_quadrature_frame(int(i))
        t = np.array([0.0, 0.5, 1.0])
        xp = m.to_physical(np.full(3, fr.plus), fr.plus_ref(t))
        xm = m.to_physical(np.full(3, fr.minus), fr.minus_ref(t))
        assert np.max(np.abs(xp - xm)) < 1e-13
        assert np.max(np.abs(xp - fr.point(t))) < 1e-13


def test_frame_hanging_covers_half_edge():
    r = refine(build_uniform(2), {0})
    hang = np.flatnonzero(r.faces.hanging)
    assert hang.size > 0
    for i in hang:
        fr = r.face_quadrature_frame(int(i))
        a, b = fr.minus_ref(np.array([0.0, 1.0]))
        # both ends lie on one reference edge of the coarse element
        on = [abs(a[1]) < 1e-12 and abs(b[1]) < 1e-12,
              abs(a[0]) < 1e-12 and abs(b[0]) < 1e-12,
              abs(a.sum() - 1) < 1e-12 and abs(b.sum() - 1) < 1e-12]
        assert any(on)
        edge_len = np.sqrt(2.0) if on[2] and not (on[0] or on[1]) else 1.0
        assert abs(np.linalg.norm(a - b) - 0.5 * edge_len) < 1e-12
        assert r.level[fr.plus] == r.level[fr.minus] + 1


def test_normals_point_plus_to_minus():
    r = refine(build_uniform(3), {0, 5, 7})
    f = r.faces
    c = r.centroids
    inter = f.kind == INTERIOR
    d = c[f.minus[inter]] - c[f.plus[inter]]
    assert np.all(np.einsum("ij,ij->i", d, f.normal[inter]) > 0)
    bnd = ~inter
    mid = 0.5 * (f.p0[bnd] + f.p1[bnd])
    assert np.all(np.einsum("ij,ij->i", mid - c[f.plus[bnd]], f.normal[bnd]) > 0)


def test_locate_lowest_id_wins():
    m = build_uniform(2)
    # point on the diagonal of the first square belongs to elements 0 and 1
    assert m.locate([[0.25, 0.25]])[0] == 0
    assert m.locate([[2.0, 0.5]])[0] == -1


def test_crack_edges_disconnected():
    m = build_uniform(4, CRACK_SEG)
    below = m.locate([[0.8, 0.5 - 1e-9]])[0]
    above = m.locate([[0.8, 0.5 + 1e-9]])[0]
    shared = set(m.elements[below]) & set(m.elements[above])
    for v in shared:
        x, y = m.vertices[v]
        assert not (abs(y - 0.5) < 1e-14 and 0.5 < x < 1.0)
    assert len(shared) < 2


def test_mesh_is_immutable():
    m = build_uniform(2)
    with pytest.raises(Exception):
        m.vertices = np.zeros((1, 2))
    r = refine(m, {0})
    assert m.n_elements == 8 and r.n_elements > 8
