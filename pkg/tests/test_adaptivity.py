import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from sldg.adaptivity import LineageError, indicator, inherit_degrees, mark, refine_step, transfer
from sldg.dgspace import Solution, make_space, project
from sldg.mesh import build_uniform, refine
from sldg.postproc import error_l2
from sldg.solve import l2_norm_coeffs


def test_indicator_zero_and_linear():
    m = build_uniform(4)
    sp = make_space(m, 2)
    assert np.all(indicator(Solution.zeros(sp)) == 0)
    eta = indicator(project(lambda x: x[..., 0], sp))
    assert np.allclose(eta, m.h, rtol=1e-12)


def test_mark_examples():
    assert mark([3, 1, 2, 5], 0.0) == set()
    assert mark([3, 1, 2, 5], 1.0) == {0, 1, 2, 3}
    assert mark([3, 1, 2, 5], 0.5) == {3, 0}
    assert mark([1, 1, 1, 1], 0.5) == {0, 1}
    with pytest.raises(ValueError):
        mark([1.0], 1.5)


@given(etas=st.lists(st.floats(0, 10), min_size=1, max_size=40),
       t1=st.floats(0, 1), t2=st.floats(0, 1))
def test_mark_monotone_in_theta(etas, t1, t2):
    lo, hi = sorted((t1, t2))
    a, b = mark(etas, lo), mark(etas, hi)
    assert a <= b
    assert mark(etas, hi) == b


def test_transfer_constant_exact():
    m = build_uniform(3)
    sp = make_space(m, 2)
    c = project(lambda x: np.full(x.shape[:-1], 0.3), sp)
    r = refine(m, {0, 5})
    t = transfer(c, inherit_degrees(sp, r))
    rng = np.random.default_rng(1)
    pts = rng.uniform(0, 1, (30, 2))
    e = r.locate(pts)
    v, _ = t.at_element_points(e, r.to_reference(e, pts))
    assert np.max(np.abs(v - 0.3)) <= 1e-14


@given(seed=st.integers(0, 10**5))
def test_transfer_nested_exact(seed):
    rng = np.random.default_rng(seed)
    m = build_uniform(2)
    sp = make_space(m, 2)
    sol = Solution(sp, rng.normal(size=sp.total_dofs))
    marked = set(range(m.n_elements)) if seed % 2 else {int(rng.integers(m.n_elements))}
    r = refine(m, marked)
    t = transfer(sol, inherit_degrees(sp, r))
    pts = rng.uniform(0.001, 0.999, (20, 2))
    ef = r.locate(pts)
    # compare on the child's parent to avoid picking a different side of an edge
    ec = r.parent[ef]
    vc, gc = sol.at_element_points(ec, m.to_reference(ec, pts))
    vf, gf = t.at_element_points(ef, r.to_reference(ef, pts))
    assert np.max(np.abs(vc - vf)) < 1e-12
    assert np.max(np.abs(gc - gf)) < 1e-10
    assert abs(l2_norm_coeffs(sp, sol.coeffs) - l2_norm_coeffs(t.space, t.coeffs)) < 1e-12


def test_transfer_into_higher_degree():
    m = build_uniform(2)
    sp = make_space(m, 1)
    sol = project(lambda x: 2 * x[..., 0] - x[..., 1], sp)
    r = refine(m, {0})
    t = transfer(sol, make_space(r, 2))
    assert error_l2(t, lambda x: 2 * x[..., 0] - x[..., 1]) < 1e-13


def test_transfer_preserves_inner_product():
    m = build_uniform(3)
    sp = make_space(m, 3)
    sol = project(lambda x: np.sin(3 * x[..., 0]) * x[..., 1], sp)
    r = refine(m, {0, 1, 8})
    t = transfer(sol, inherit_degrees(sp, r))
    w = lambda x: np.cos(x[..., 0] + 2 * x[..., 1])  # noqa: E731
    ip = []
    for s in (sol, t):
        rule = s.space.volume_rule(4)
        vals, _ = s.at_reference_points(rule.points)
        mesh = s.space.mesh
        x = mesh.to_physical(np.arange(mesh.n_elements)[:, None], rule.points[None])
        ip.append(np.sum(np.outer(mesh.det, rule.weights) * vals * w(x)))
    assert abs(ip[0] - ip[1]) < 1e-12


def test_transfer_lineage_checked():
    m = build_uniform(2)
    sp = make_space(m, 2)
    other = refine(build_uniform(2), {0})
    with pytest.raises(LineageError):
        transfer(Solution.zeros(sp), make_space(other, 2))
    r = refine(m, {0})
    with pytest.raises(LineageError):
        transfer(Solution.zeros(sp), make_space(r, 1))


def test_refine_step():
    m = build_uniform(4)
    sol = project(lambda x: np.exp(5 * x[..., 0]), make_space(m, 1))
    new, marked = refine_step(sol, 0.1)
    assert len(marked) == 4
    assert new.n_elements > m.n_elements
    # the steepest gradient is at x = 1
    assert all(m.centroids[e][0] > 0.5 for e in marked)
