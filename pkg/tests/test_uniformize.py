import numpy as np
import pytest

from fbms.uniformize import (DegenerateMetricError, MetricAnnulus, modulus, period_kappa, refinement_study,
                             solve_harmonic_u, uniformize, uniformize_report, uniformizing_map_eval)


def spec_twist(s, th):
    return np.sin(2 * np.pi * s) / 4


def test_rejects_indefinite_metric():
    g = np.ones((5, 8))
    with pytest.raises(DegenerateMetricError):
        MetricAnnulus(g, 2 * g, g)


def test_log_chart_of_A_e_gives_u_equal_s():
    M = MetricAnnulus.flat_pullback(np.e, 33, 64, chart="log")
    u = solve_harmonic_u(M)
    assert np.max(np.abs(u - M.s[:, None])) < 1e-4
    assert abs(period_kappa(M, u) - 2 * np.pi) < 1e-4 * 2 * np.pi


def test_product_metric():
    M = MetricAnnulus.product(17, 32)
    u = solve_harmonic_u(M)
    assert np.max(np.abs(u - M.s[:, None])) < 1e-12
    assert abs(period_kappa(M, u) - 2 * np.pi) < 1e-12


def test_conformal_rescale_keeps_u(rng):
    M = MetricAnnulus.flat_pullback(2.5, 33, 48, twist=spec_twist)
    lam = rng.standard_normal(M.shape) * 0.3
    assert np.max(np.abs(solve_harmonic_u(M) - solve_harmonic_u(M.rescaled(lam)))) < 1e-12


def test_level_independence_and_maximum_principle():
    M = MetricAnnulus.flat_pullback(3.0, 65, 64, twist=lambda s, th: 0.7 * np.sin(np.pi * s) * (np.sin(np.pi * s) + 0.5 * np.sin(th)))
    u = solve_harmonic_u(M)
    assert abs(period_kappa(M, u, 0.25) - period_kappa(M, u, 0.75)) < 1e-4
    assert u.min() >= 0.0 and u.max() <= 1.0


@pytest.mark.parametrize("s", [1.5, np.e, 5.0])
@pytest.mark.parametrize("kind", ["flat", "rescaled", "twisted"])
def test_modulus_recovered_at_256(s, kind):
    M = MetricAnnulus.flat_pullback(s, 256, 256, twist=spec_twist if kind == "twisted" else None)
    if kind == "rescaled":
        M = M.rescaled(lambda S, T: 0.4 * np.sin(np.pi * S) * np.cos(T))
    assert abs(modulus(M) - s) < 1e-3 * s


def test_second_order_convergence():
    study = refinement_study(lambda n: MetricAnnulus.flat_pullback(2.0, n, n), sizes=(32, 64, 128), exact=2.0)
    assert min(study["order"]) >= 1.8


def test_uniformizing_map_boundaries():
    s = 2.0
    M = MetricAnnulus.flat_pullback(s, 65, 64, twist=spec_twist)
    res = uniformize(M)
    assert not res.flagged and res.closure_defect < 1e-2
    th = np.linspace(0, 2 * np.pi, 13)
    assert np.allclose(np.abs(uniformizing_map_eval(M, np.zeros_like(th), th, res)), 1.0, atol=1e-12)
    assert np.allclose(np.abs(uniformizing_map_eval(M, np.ones_like(th), th, res)), res.t, atol=1e-12)
    # log chart: psi is the identity chart z = s^u e^{i theta} up to a rotation
    L = MetricAnnulus.flat_pullback(s, 65, 64, chart="log")
    psi = uniformizing_map_eval(L, np.full(5, 0.5), np.linspace(0, 1, 5))
    ang = np.unwrap(np.angle(psi))
    assert np.allclose(np.diff(ang), 0.25, atol=1e-3)


def test_io_round_trips(tmp_path, rng):
    M = MetricAnnulus.flat_pullback(2.0, 9, 12, twist=spec_twist)
    J = MetricAnnulus.from_json(M.to_json())
    assert np.array_equal(J.g11, M.g11) and np.array_equal(J.g12, M.g12)
    M.to_csv(tmp_path / "m.csv")
    C = MetricAnnulus.from_csv(tmp_path / "m.csv")
    assert np.array_equal(C.g22, M.g22)


def test_report_shape():
    rep = uniformize_report(MetricAnnulus.flat_pullback(2.0, 33, 32),
                            lambda n: MetricAnnulus.flat_pullback(2.0, n, n), sizes=(16, 32, 64), exact=2.0)
    assert set(rep) == {"kappa", "t", "refinement_diagnostics"}
    assert len(rep["refinement_diagnostics"]["order"]) == 2
