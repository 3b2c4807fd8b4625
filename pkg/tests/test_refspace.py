from math import factorial

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from sldg.refspace import (MAX_RULE_DEGREE, ModalBasis, basis_eval, basis_grad, edge_rule,
                           mode_indices, n_modes, triangle_rule)


def monomial_integral(a, b):
    return factorial(a) * factorial(b) / factorial(a + b + 2)


def random_interior(rng, k):
    p = rng.random((k, 2))
    flip = p.sum(axis=1) > 1
    p[flip] = 1 - p[flip]
    return 0.02 + 0.96 * p * 0.98


def test_dimensions():
    assert [n_modes(n) for n in range(5)] == [1, 3, 6, 10, 15]
    assert basis_eval(1, [0.2, 0.3]).shape == (3,)
    assert basis_grad(2, [0.2, 0.3]).shape == (6, 2)
    assert ModalBasis(3).dim == 10
    assert len(mode_indices(4)) == 15


def test_constant_mode():
    v = basis_eval(1, np.array([[0.1, 0.1], [0.7, 0.2]]))
    assert v[0, 0] == v[1, 0]
    g = basis_grad(3, np.array([[0.1, 0.1], [0.3, 0.6]]))
    assert np.all(g[:, 0, :] == 0.0)


@pytest.mark.parametrize("n", range(7))
def test_gram_identity(n):
    rule = triangle_rule(max(2 * n, 1))
    phi = basis_eval(n, rule.points)
    gram = (phi * rule.weights[:, None]).T @ phi
    assert np.max(np.abs(gram - np.eye(n_modes(n)))) < 1e-12


def test_hierarchical():
    pts = np.array([[0.1, 0.2], [0.5, 0.5], [0.0, 1.0]])
    assert np.allclose(basis_eval(4, pts)[:, :6], basis_eval(2, pts), atol=0, rtol=1e-14)


def test_grad_against_central_differences(rng):
    pts = random_interior(rng, 10)
    h = 1e-6
    g = basis_grad(4, pts)
    for d in range(2):
        e = np.zeros(2)
        e[d] = h
        fd = (basis_eval(4, pts + e) - basis_eval(4, pts - e)) / (2 * h)
        assert np.max(np.abs(fd - g[:, :, d])) < 1e-6


def test_vertices_are_accepted():
    v = basis_eval(3, np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]))
    assert np.all(np.isfinite(v))
    assert np.all(np.isfinite(basis_grad(3, np.array([[0.0, 1.0]]))))


@pytest.mark.parametrize("bad", [[-0.1, 0.2], [0.6, 0.6], [0.2, -1e-6]])
def test_outside_point_rejected(bad):
    with pytest.raises(ValueError):
        basis_eval(2, bad)
    with pytest.raises(ValueError):
        basis_grad(2, bad)


@pytest.mark.parametrize("q", range(1, MAX_RULE_DEGREE + 1))
def test_triangle_rule_exactness(q):
    rule = triangle_rule(q)
    assert rule.degree >= q
    assert np.all(rule.weights > 0)
    assert abs(rule.weights.sum() - 0.5) < 1e-14
    x, y = rule.points.T
    assert np.all(x >= -1e-15) and np.all(y >= -1e-15) and np.all(x + y <= 1 + 1e-15)
    for a in range(q + 1):
        for b in range(q + 1 - a):
            exact = monomial_integral(a, b)
            got = rule.integrate(x**a * y**b)
            assert abs(got - exact) <= 1e-12 * exact


def test_triangle_rule_first_moment():
    rule = triangle_rule(3)
    assert abs(rule.integrate(rule.points[:, 0]) - 1 / 6) < 1e-14


def test_triangle_rule_symmetric():
    rule = triangle_rule(7)
    def canon(pts):
        return pts[np.lexsort(np.round(pts, 13).T[::-1])]
    assert np.allclose(canon(rule.points), canon(rule.points[:, ::-1]), atol=1e-14)


@pytest.mark.parametrize("q", [0, 21, -3])
def test_triangle_rule_range(q):
    with pytest.raises(ValueError):
        triangle_rule(q)


@pytest.mark.parametrize("bad", [0, 21])
def test_edge_rule_range(bad):
    with pytest.raises(ValueError):
        edge_rule(bad)


def test_edge_rule_basics():
    r = edge_rule(2)
    assert abs(r.weights.sum() - 1.0) < 1e-14
    assert abs(r.integrate(r.points**3) - 0.25) < 1e-14


@given(c=st.integers(1, 20), seed=st.integers(0, 10**6))
def test_edge_rule_random_polynomial(c, seed):
    coef = np.random.default_rng(seed).uniform(-1, 1, 2 * c)
    r = edge_rule(c)
    vals = np.polynomial.polynomial.polyval(r.points, coef)
    exact = np.sum(coef / np.arange(1, 2 * c + 1))
    assert abs(r.integrate(vals) - exact) < 1e-13


@given(q=st.integers(1, MAX_RULE_DEGREE), seed=st.integers(0, 10**6))
def test_triangle_rule_random_polynomial(q, seed):
    rng = np.random.default_rng(seed)
    rule = triangle_rule(q)
    x, y = rule.points.T
    got = exact = 0.0
    scale = 0.0
    for a in range(q + 1):
        for b in range(q + 1 - a):
            c = rng.uniform(-1, 1)
            got += c * rule.integrate(x**a * y**b)
            exact += c * monomial_integral(a, b)
            scale += abs(c) * monomial_integral(a, b)
    assert abs(got - exact) <= 1e-12 * scale


def test_rules_are_read_only():
    r = triangle_rule(4)
    with pytest.raises(ValueError):
        r.weights[0] = 1.0


def test_eval_is_pure():
    p = np.array([[0.3, 0.3]])
    a = basis_eval(3, p)
    b = basis_eval(3, p.copy())
    assert np.array_equal(a, b)
    assert np.array_equal(p, [[0.3, 0.3]])
