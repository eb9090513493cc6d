import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fbms.circle import (AliasingError, CircleMap, ManifoldDomainError, frac_laplacian, from_samples,
                         gagliardo_double_integral, h_s_norm_sq, half_seminorm_sq, l2_inner, multiply,
                         pointwise_compose, riesz_transform, theta_grid, to_samples)

seeds = st.integers(0, 2 ** 32 - 1)


def unit_circle(N=1):
    return CircleMap.from_function(lambda th: np.stack([np.cos(th), np.sin(th)], 1), N)


def test_constant_samples():
    u = CircleMap.constant([1.5, -2.0], N=3)
    assert np.allclose(to_samples(u, 7), [[1.5, -2.0]] * 7, atol=1e-15)


def test_cos_samples_at_four_nodes():
    u = CircleMap.from_modes({1: 0.5}, m=1, N=1)
    assert np.allclose(to_samples(u, 4)[:, 0], [1, 0, -1, 0], atol=1e-15)


def test_too_few_samples_alias():
    u = CircleMap.zeros(1, 5)
    with pytest.raises(AliasingError):
        to_samples(u, 10)
    with pytest.raises(AliasingError):
        from_samples(np.zeros(10), 5)


@settings(max_examples=30, deadline=None)
@given(seeds, st.integers(1, 12), st.integers(1, 3), st.integers(0, 9))
def test_round_trip(seed, N, m, extra):
    u = CircleMap.random(m, N, np.random.default_rng(seed))
    assert from_samples(to_samples(u, 2 * N + 1 + extra), N).allclose(u, atol=1e-13)


def test_equator_coefficients():
    u = unit_circle()
    assert np.allclose(u.mode(1), [0.5, -0.5j], atol=1e-15)
    assert np.allclose(u.mode(-1), [0.5, 0.5j], atol=1e-15)


def test_cos_top_mode_at_minimal_grid():
    N = 6
    th = theta_grid(2 * N + 1)
    u = from_samples(np.cos(N * th), N)
    assert np.allclose(u.mode(N), 0.5) and np.allclose(u.mode(-N), 0.5)


def test_hermitian_symmetry_enforced():
    with pytest.raises(ValueError):
        CircleMap(np.array([[1.0, 0.0, 0.0]]) * (1 + 1j))


def test_half_laplacian_symbol():
    n = 4
    u = CircleMap.from_modes({n: 0.3 - 0.2j}, 1, 6)
    assert frac_laplacian(u, 0.5).allclose(u * n, atol=1e-14)


@pytest.mark.parametrize("s", [-0.5, 0.25, 0.5, 1.0])
def test_constants_annihilated(s):
    assert frac_laplacian(CircleMap.constant([2.0], 3), s).allclose(CircleMap.zeros(1, 3))


def test_multiplier_composition(rng):
    u = CircleMap.random(2, 10, rng)
    assert frac_laplacian(frac_laplacian(u, 0.25), 0.25).allclose(frac_laplacian(u, 0.5), atol=1e-13)


@pytest.mark.parametrize("k", [1, 2, 5])
def test_riesz_cos_to_sin(k):
    u = CircleMap.from_modes({k: 0.5}, 1, 6)
    th = theta_grid(32)
    assert np.allclose(riesz_transform(u)(th)[:, 0], np.sin(k * th), atol=1e-14)


def test_riesz_square(rng):
    u = CircleMap.random(2, 8, rng)
    centred = u - CircleMap.constant(u.mean, u.N)
    assert riesz_transform(riesz_transform(u)).allclose(-centred, atol=1e-14)


def test_hs_norm_examples(rng):
    assert h_s_norm_sq(CircleMap.zeros(2, 3), 1.0) == 0.0
    assert np.isclose(h_s_norm_sq(CircleMap.from_modes({1: 0.5}, 1, 2), 0.0), 0.5)
    u = CircleMap.random(2, 8, rng)
    vals = [h_s_norm_sq(u, s) for s in (-1.0, -0.5, 0.0, 0.5, 1.0)]
    assert all(a <= b for a, b in zip(vals, vals[1:]))


def test_half_seminorm_examples():
    assert half_seminorm_sq(CircleMap.constant([3.0], 4)) == 0.0
    assert np.isclose(half_seminorm_sq(unit_circle()), 2 * np.pi, atol=1e-14)


@pytest.mark.parametrize("seed", range(4))
def test_double_integral_is_two_pi_times_seminorm(seed):
    # iint |u(a)-u(b)|^2/|e^ia - e^ib|^2 = 4 pi^2 sum |n||c_n|^2 = 2 pi * half_seminorm_sq
    u = CircleMap.random(2, 8, np.random.default_rng(seed))
    lhs = gagliardo_double_integral(u, 512)
    assert abs(lhs - 2 * np.pi * half_seminorm_sq(u)) < 1e-3 * lhs


def test_double_integral_cos_by_scipy():
    from scipy.integrate import dblquad
    u = CircleMap.from_modes({1: 0.5}, 1, 1)
    f = lambda b, a: ((np.cos(a) - np.cos(b)) ** 2 / (2 - 2 * np.cos(a - b))) if a != b else np.sin(a) ** 2
    ref, _ = dblquad(f, 0, 2 * np.pi, 0, 2 * np.pi, epsabs=1e-10)
    assert np.isclose(ref, 2 * np.pi ** 2, rtol=1e-6)
    assert np.isclose(gagliardo_double_integral(u, 256), ref, rtol=1e-6)


def test_pointwise_compose_examples(rng):
    u = CircleMap.random(3, 6, rng)
    assert pointwise_compose(u, lambda x: x).allclose(u, atol=1e-13)
    sq = pointwise_compose(unit_circle(), lambda x: np.sum(x * x, axis=1))
    assert sq.allclose(CircleMap.constant([1.0], 1), atol=1e-14)
    A = rng.standard_normal((2, 3))
    assert pointwise_compose(u, lambda x: x @ A.T).allclose(u.linear(A), atol=1e-12)


def test_pointwise_compose_domain_error():
    def bad(x):
        raise ManifoldDomainError("outside")
    with pytest.raises(ManifoldDomainError):
        pointwise_compose(unit_circle(), bad)
    with pytest.raises(ValueError):
        pointwise_compose(unit_circle(), lambda x: x, oversample=1)


def test_parseval(rng):
    u = CircleMap.random(3, 9, rng)
    K = 64
    quad = np.mean(np.sum(to_samples(u, K) ** 2, axis=1))
    assert abs(quad - np.sum(np.abs(u.coeffs) ** 2)) < 1e-12


@pytest.mark.parametrize("s", [-0.75, 0.25, 0.5, 1.5])
def test_self_adjoint_and_commuting(rng, s):
    u, v = CircleMap.random(2, 7, rng), CircleMap.random(2, 7, rng)
    L = lambda w: frac_laplacian(w, s)
    assert abs(l2_inner(L(u), v) - l2_inner(u, L(v))) < 1e-12
    R = riesz_transform
    assert abs(l2_inner(R(u), v) + l2_inner(u, R(v))) < 1e-12
    assert R(L(u)).allclose(L(R(u)), atol=1e-13)


def test_multiply_exact(rng):
    u, v = CircleMap.random(1, 5, rng), CircleMap.random(1, 4, rng)
    th = theta_grid(40)
    assert np.allclose(multiply(u, v)(th), u(th) * v(th), atol=1e-13)


def test_json_round_trip(rng):
    u = CircleMap.random(3, 5, rng)
    back = CircleMap.from_json(json.loads(json.dumps(u.to_json())))
    assert np.array_equal(back.coeffs, u.coeffs)
