import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fbms.circle import CircleMap, theta_grid, to_samples
from fbms.fraccalc import (ALIAS_TOL, F, LineSample, Lam, T, T_star, U, U_star, aliasing_flag,
                           algebraic_identity_residual, commutators, crw_identity_check, duality_residuals,
                           fraccalc_suite, half_laplacian, l2, normal_part_bound_check, line_seminorm_double_integral,
                           line_to_circle, product, riesz, seminorm_identity_check, seminorm_transfer_check,
                           stereo, stereo_inverse, stereographic_identity_check, stereographic_transfer,
                           t_star_pointwise_min, u_decomposition_residual, u_star_decomposition_residual)
from fbms.manifolds import Sphere

seeds = st.integers(0, 2 ** 32 - 1)


def rand(rng, N=10, m=1, zero_mean=False):
    u = CircleMap.random(m, N, rng, decay=1.0)
    if zero_mean:
        u = u - CircleMap.constant(u.mean, N)
    return u


def test_constant_Q_kills_T_and_U(rng):
    Q, v = CircleMap.constant([2.3], 6), rand(rng)
    assert l2(T(Q, v)) < 1e-13 and l2(U(Q, v)) < 1e-13


@settings(max_examples=25, deadline=None)
@given(seeds)
def test_t_star_diagonal_is_nonnegative(seed):
    assert t_star_pointwise_min(rand(np.random.default_rng(seed), 12)) >= -1e-8


@settings(max_examples=25, deadline=None)
@given(seeds)
def test_duality(seed):
    rng = np.random.default_rng(seed)
    r = duality_residuals(rand(rng), rand(rng), rand(rng))
    assert r["T"] < 1e-10 and r["U"] < 1e-10


@pytest.mark.parametrize("f, v", [({1: 0.5}, {1: 0.5}), ({3: 0.5}, {5: -0.5j})])
def test_crw_examples(f, v):
    fm, vm = CircleMap.from_modes(f, 1, 6), CircleMap.from_modes(v, 1, 6)
    assert crw_identity_check(fm, vm)["residual"] < 1e-12


@settings(max_examples=25, deadline=None)
@given(seeds)
def test_crw_identity_with_and_without_means(seed):
    rng = np.random.default_rng(seed)
    assert crw_identity_check(rand(rng, zero_mean=True), rand(rng, zero_mean=True))["residual"] < 1e-10
    out = crw_identity_check(rand(rng), rand(rng))
    assert out["residual"] < 1e-10 and out["zero_mode_correction"] < 1e-12


@settings(max_examples=25, deadline=None)
@given(seeds)
def test_decompositions(seed):
    rng = np.random.default_rng(seed)
    P, Q, v = rand(rng), rand(rng), rand(rng)
    assert u_star_decomposition_residual(P, Q) < 1e-10
    assert u_decomposition_residual(Q, v) < 1e-10


def test_t_star_symmetric(rng):
    P, Q = rand(rng), rand(rng)
    assert l2(T_star(P, Q) - T_star(Q, P)) < 1e-12


def test_lambda_association_orders(rng):
    Q, v = rand(rng), rand(rng)
    other = product(v, Q) + riesz(product(riesz(v), Q))
    assert l2(Lam(Q, v) - other) < 1e-12


@pytest.mark.parametrize("name", ["T", "U", "T_star", "U_star", "Lambda", "F"])
def test_bilinearity(rng, name):
    P, Q, v, f, w = (rand(rng) for _ in range(5))
    a, b = 0.7, -1.3
    ops = {"T": lambda x, y: T(x, y), "U": lambda x, y: U(x, y), "T_star": lambda x, y: T_star(x, y),
           "U_star": lambda x, y: U_star(x, y), "Lambda": lambda x, y: Lam(x, y), "F": lambda x, y: F(x, y)}
    op = ops[name]
    assert l2(op(Q, a * v + b * w) - (a * op(Q, v) + b * op(Q, w))) < 1e-10
    assert l2(op(a * Q + b * w, v) - (a * op(Q, v) + b * op(w, v))) < 1e-10


def test_commutators_on_line_samples_agree_with_circle(rng):
    # a band-limited periodic function sampled on [-pi, pi] is a LineSample with exact spectrum
    N, K = 6, 128
    maps = [rand(rng, N) for _ in range(4)]
    th = -np.pi + 2 * np.pi * np.arange(K) / K
    lines = [LineSample(m(th)[:, 0], np.pi) for m in maps]
    circ = commutators(*maps)
    line = commutators(*lines)
    for k in circ:
        assert np.max(np.abs(circ[k](th)[:, 0] - line[k].values)) < 1e-10
    assert not aliasing_flag(*line.values())


def test_aliasing_is_flagged():
    x = np.linspace(-1, 1, 64, endpoint=False)
    rough = LineSample(np.sign(np.sin(40 * np.pi * x)), 1.0)
    assert product(rough, rough).aliased or product(rough, rough).top_decile_fraction() > ALIAS_TOL
    smooth = LineSample.from_function(lambda x: np.exp(-x * x), 8.0, 256)
    assert not product(smooth, smooth).aliased and smooth.decays


def test_normal_part_bound_on_circle():
    out = []
    for N in (8, 16, 32):
        w = CircleMap.from_function(lambda th: np.stack([np.cos(th), np.sin(th)], 1), N)
        out.append(normal_part_bound_check(w, Sphere(dim=2)))
    ratios = [o["max_ratio"] for o in out]
    assert np.all(np.isfinite(ratios)) and max(ratios) - min(ratios) < 1e-10
    assert out[0]["identity_residual"] < 1e-12


def test_normal_part_bound_constant_map():
    w = CircleMap.constant([0.0, 1.0], 4)
    o = normal_part_bound_check(w, Sphere(dim=2))
    assert o["max_lhs"] == 0.0 and abs(o["min_T_star"]) < 1e-15


def test_algebraic_identity_on_sphere_samples(rng):
    x = rng.standard_normal((50, 3))
    assert algebraic_identity_residual(x / np.linalg.norm(x, axis=1, keepdims=True)) < 1e-12


@pytest.mark.parametrize("seed", range(3))
def test_seminorm_double_integral(seed):
    d = seminorm_identity_check(rand(np.random.default_rng(seed), 8), K=512)
    assert d.passed


def test_stereographic_maps_are_inverse():
    x = np.linspace(-50, 50, 101)
    assert np.allclose(stereo(stereo_inverse(x)), x, rtol=1e-10, atol=1e-10)
    assert np.isinf(stereo(np.pi / 2))


def test_transfer_round_trip():
    g = line_to_circle(lambda x: 1 / (1 + x * x), 64)
    line = stereographic_transfer(g, 8.0, 256)
    assert np.max(np.abs(line.values - 1 / (1 + line.x ** 2))) < 1e-10


def test_seminorm_change_of_variables():
    d = seminorm_transfer_check(lambda x: 1 / (1 + x * x))
    assert d.passed
    assert np.isclose(d.extra["line"], np.pi ** 2 / 2, rtol=1e-10)


def test_line_double_integral_closed_forms():
    # 2 pi int |xi| |f^(xi)|^2 with the unitary transform
    assert abs(line_seminorm_double_integral(lambda x: np.exp(-x * x), 512) - 2 * np.pi) < 1e-12
    assert abs(line_seminorm_double_integral(lambda x: 1 / (1 + x * x), 512) - np.pi ** 2 / 2) < 1e-12
    assert seminorm_transfer_check(lambda x: np.exp(-x * x)).passed


def test_line_double_integral_at_infinity_constant():
    val = line_seminorm_double_integral(lambda x: np.full_like(x, 3.0), 64, at_infinity=3.0)
    assert abs(val) < 1e-20


def test_stereographic_identity_constant():
    d = stereographic_identity_check(lambda x: np.zeros_like(x), L=8.0, K=256, N=32)
    assert d.residual == 0.0


def test_stereographic_identity_refines():
    w = lambda x: x / (1 + x * x) ** 2
    coarse = stereographic_identity_check(w, L=16.0, K=1024)
    fine = stereographic_identity_check(w, L=32.0, K=4096)
    assert fine.residual < 1e-3 and fine.residual < coarse.residual


def test_suite_passes_and_serializes():
    diags = fraccalc_suite(seed=3)
    assert all(d.passed for d in diags)
    js = diags[0].to_json()
    assert {"name", "residual", "tolerance", "pass", "grid_params"} <= set(js)
