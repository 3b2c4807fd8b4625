import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from sldg.constitutive import (ModelParams, coeff_G, coeff_G_prime, exact_solution, flux,
                               source_f, strain_from_stress, stress_from_gradient)

vec = st.tuples(st.floats(-50, 50), st.floats(-50, 50))
params = st.builds(ModelParams, alpha=st.sampled_from([1.0, 1.5, 2.0, 3.0]),
                   beta=st.floats(0.0, 100.0), mu=st.floats(0.1, 5.0))


def test_coeff_values():
    assert coeff_G(0.0, ModelParams(1, 1, 0.5)) == 1.0
    assert abs(coeff_G(1.0, ModelParams(2, 2, 1)) - 1 / (2 * np.sqrt(5))) < 1e-15
    assert np.all(coeff_G(np.array([0.0, 3.0, 1e6]), ModelParams(2, 0, 1)) == 0.5)


@pytest.mark.parametrize("kw", [dict(alpha=0), dict(beta=-1), dict(mu=0)])
def test_params_rejected(kw):
    with pytest.raises(ValueError):
        ModelParams(**kw)


def test_negative_s_rejected():
    with pytest.raises(ValueError):
        coeff_G(-1.0, ModelParams())
    with pytest.raises(ValueError):
        coeff_G_prime(0.0, ModelParams(alpha=0.5))


def fd(fun, s, h=1e-6):
    return (fun(s + h) - fun(s - h)) / (2 * h)


def test_coeff_prime_values():
    p = ModelParams(1, 1, 0.5)
    assert abs(coeff_G_prime(0.0, p) + 1.0) < 1e-12
    assert abs(coeff_G_prime(1.0, p) + 0.25) < 1e-12
    # one-sided limit at zero against a forward difference
    assert abs((coeff_G(1e-7, p) - coeff_G(0.0, p)) / 1e-7 + 1.0) < 1e-6
    assert abs(fd(lambda s: coeff_G(s, p), 1.0) + 0.25) < 1e-8
    assert coeff_G_prime(2.0, ModelParams(beta=0)) == 0.0


@given(s=st.floats(1e-3, 1e3), p=params)
def test_coeff_prime_matches_fd(s, p):
    h = 1e-6 * max(1.0, s)
    ref = fd(lambda t: coeff_G(t, p), s, h)
    assert abs(coeff_G_prime(s, p) - ref) <= 1e-6 * max(1.0, abs(ref))
    assert coeff_G_prime(s, p) <= 0


@given(s=st.floats(0, 1e6), t=st.floats(0, 1e6), p=params)
def test_coeff_bounded_and_monotone(s, t, p):
    a, b = coeff_G(s, p), coeff_G(t, p)
    assert 0 < a <= 1 / (2 * p.mu)
    if s <= t:
        assert a >= b


@given(v1=vec, v2=vec, p=params)
def test_flux_lipschitz_and_monotone(v1, v2, p):
    v1, v2 = np.array(v1), np.array(v2)
    d = flux(v1, p) - flux(v2, p)
    assert np.linalg.norm(d) <= np.linalg.norm(v1 - v2) / (2 * p.mu) + 1e-12
    assert d @ (v1 - v2) >= -1e-12


def test_stress():
    assert np.array_equal(stress_from_gradient([0.0, 0.0]), [0.0, 0.0])
    assert np.array_equal(stress_from_gradient([1.0, 2.0]), [2.0, -1.0])


@given(v=vec)
def test_stress_is_rotation(v):
    assert abs(np.linalg.norm(stress_from_gradient(v)) - np.linalg.norm(v)) < 1e-12


def test_strain_values():
    p = ModelParams(1, 1, 0.5)
    assert np.array_equal(strain_from_stress([0.0, 0.0], p), [0.0, 0.0])
    assert np.allclose(strain_from_stress([3.0, 4.0], p), [0.5, 4 / 6], rtol=1e-14)


@given(T=vec)
def test_strain_bound(T):
    p = ModelParams(alpha=2, beta=2, mu=1)
    assert np.linalg.norm(strain_from_stress(T, p)) < 0.25


@given(T=vec, p=params)
def test_strain_bound_general(T, p):
    if p.beta > 0:
        assert np.linalg.norm(strain_from_stress(T, p)) < 1 / (2 * p.mu * p.beta)


def test_exact_solution_values():
    u, g, H = exact_solution(np.array([0.5, 0.5]))
    assert abs(u - 0.5**7) < 1e-16
    assert abs(g[0] - 3 / 128) < 1e-16 and abs(g[1] - 3 / 128) < 1e-16
    t = np.linspace(0, 1, 7)
    edges = np.concatenate([np.column_stack([t, 0 * t]), np.column_stack([t, 1 + 0 * t]),
                            np.column_stack([0 * t, t]), np.column_stack([1 + 0 * t, t])])
    assert np.all(exact_solution(edges)[0] == 0.0)


def test_exact_derivatives_fd(rng):
    pts = rng.uniform(0.05, 0.95, (10, 2))
    h = 1e-6
    _, g, H = exact_solution(pts)
    for d in range(2):
        e = np.zeros(2)
        e[d] = h
        up, gp, _ = exact_solution(pts + e)
        um, gm, _ = exact_solution(pts - e)
        assert np.allclose((up - um) / (2 * h), g[:, d], atol=1e-9)
        assert np.allclose((gp - gm) / (2 * h), H[:, :, d], atol=1e-8)


def test_source_at_corner_and_linear_limit(rng):
    for p in (ModelParams(), ModelParams(2, 2, 1)):
        assert source_f(np.array([0.0, 0.0]), p) == 0.0
    pts = rng.uniform(0.05, 0.95, (10, 2))
    _, _, H = exact_solution(pts)
    assert np.allclose(source_f(pts, ModelParams(beta=0.0)), -(H[:, 0, 0] + H[:, 1, 1]),
                       rtol=0, atol=1e-15)


@pytest.mark.parametrize("p", [ModelParams(1, 1, 0.5), ModelParams(2, 2, 1), ModelParams(1, 10, 0.5)])
def test_source_matches_fd_divergence(rng, p):
    pts = rng.uniform(0.1, 0.9, (10, 2))
    h = 1e-5

    def q(x):
        return flux(exact_solution(x)[1], p)

    div = np.zeros(len(pts))
    for d in range(2):
        e = np.zeros(2)
        e[d] = h
        div += (q(pts + e)[:, d] - q(pts - e)[:, d]) / (2 * h)
    f = source_f(pts, p)
    assert np.all(np.abs(f + div) <= 1e-5 * np.abs(f))
