import json

import numpy as np
import pytest

from fbms.annulus import AnnulusBoundaryData, hopf_boundary_integrand
from fbms.circle import CircleMap, ManifoldDomainError, l2_inner, pointwise_compose, theta_grid
from fbms.disk import disk_dtn
from fbms.annulus import dtn_inner, dtn_outer
from fbms.manifolds import Ellipsoid, Sphere
from fbms.runner.oracles import catenoid_oracle
from fbms.solver import (FAIL, NOT_APPLICABLE, PASS, DegenerateAnnulusError, SolverConfig, StepSizeError,
                         certify_free_boundary, critical_t, el_residual, energy, energy_change, gradient_step,
                         solve_half_harmonic, teichmuller_solve)

S2 = Sphere()
EPS = np.finfo(float).eps


def curve(f, N):
    return CircleMap.from_function(lambda th: np.stack(f(th), 1), N)


def equator(N=16, phase=lambda th: th):
    return curve(lambda th: [np.cos(phase(th)), np.sin(phase(th)), 0 * th], N)


def latitude(eps, N=8):
    s = np.sqrt(1 + eps * eps)
    return curve(lambda th: [np.cos(th) / s, np.sin(th) / s, 0 * th + eps / s], N)


def viviani(N=4):
    # (cos^2, cos sin, sin) lies on the unit sphere and is band limited
    return curve(lambda th: [np.cos(th) ** 2, np.cos(th) * np.sin(th), np.sin(th)], N)


def random_rotation(rng):
    Q, R = np.linalg.qr(rng.standard_normal((3, 3)))
    return Q * np.sign(np.diag(R))


def test_config_validation():
    with pytest.raises(ValueError):
        SolverConfig(step_size=0.0)
    with pytest.raises(ValueError):
        SolverConfig(residual_tol=-1.0)
    with pytest.raises(ValueError):
        SolverConfig.from_dict({"stepsize": 1.0})
    assert SolverConfig.from_dict({"max_iters": 3}).max_iters == 3


def test_residual_vanishes_on_circle_and_equator():
    circle = curve(lambda th: [np.cos(th), np.sin(th)], 1)
    assert el_residual(circle, Sphere(dim=2)).norm < 1e-14
    assert el_residual(equator(), S2).norm < 1e-14


def test_latitude_residual_decreases_with_eps():
    res = [el_residual(latitude(e), S2).norm for e in (0.3, 0.1, 0.03)]
    assert res[0] > res[1] > res[2] > 0


def test_residual_rejects_points_deep_inside():
    with pytest.raises(ManifoldDomainError, match="sample"):
        el_residual(equator() * 0.2, S2)


def test_gradient_step_fixed_point():
    u = equator()
    assert gradient_step(u, S2, SolverConfig()).allclose(u, atol=1e-12)


def _first_variation_errors(u, phi_of, manifold, Nbig=96):
    """|(E(Pi(u + e phi)) - E(u))/e - 2 dE[phi]| for e = 1e-3, 1e-4."""
    errs = []
    maps = [u] if isinstance(u, CircleMap) else [u.a, u.b]
    phis = [phi_of(v) for v in maps]
    if isinstance(u, CircleMap):
        slope = 2 * l2_inner(disk_dtn(u), phis[0])
        pack = lambda vs: vs[0]
    else:
        slope = 2 * (l2_inner(dtn_inner(u), phis[0]) + u.t * l2_inner(dtn_outer(u), phis[1]))
        pack = lambda vs: AnnulusBoundaryData(vs[0], vs[1], u.t)
    base = pack([v.resize(Nbig) for v in maps])
    for e in (1e-3, 1e-4):
        moved = [pointwise_compose((v + e * p).resize(Nbig), manifold.nearest_point, oversample=4)
                 for v, p in zip(maps, phis)]
        errs.append(abs(energy_change(pack(moved), base) / e - slope))
    return errs, slope


def _tangent_field(rng, manifold, N=3):
    psi = CircleMap.random(3, N, rng)

    def phi_of(v):
        M = max(v.N, psi.N)
        return CircleMap.from_function(lambda t: manifold.project_tangent(manifold.nearest_point(v(t)), psi(t)),
                                       2 * M + psi.N)
    return phi_of


@pytest.mark.parametrize("seed", range(3))
def test_first_variation_disk(seed):
    rng = np.random.default_rng(seed)
    errs, slope = _first_variation_errors(viviani(), _tangent_field(rng, S2), S2)
    assert abs(slope) > 1e-3
    assert 5 < errs[0] / errs[1] < 20   # order-eps agreement


def test_first_variation_annulus(rng):
    d = AnnulusBoundaryData(viviani(), equator(4), 2.0)
    errs, slope = _first_variation_errors(d, _tangent_field(rng, S2), S2)
    assert abs(slope) > 1e-3 and 5 < errs[0] / errs[1] < 20


def _monotone(history, E0):
    floor = 16 * EPS * max(E0, 1.0)
    return all(row["energy_change"] <= floor for row in history[1:])


def test_perturbed_equator_energy_decreases():
    u = equator(16, lambda th: th + 0.1 * np.sin(th))
    rep = solve_half_harmonic(u, S2, SolverConfig(max_iters=40, residual_tol=1e-14))
    E = [row["energy"] for row in rep.history]
    assert _monotone(rep.history, E[0]) and E[-1] < E[0]


def test_huge_step_never_increases_energy():
    u = equator(16, lambda th: th + 0.1 * np.sin(th))
    rep = solve_half_harmonic(u, S2, SolverConfig(step_size=1e3, max_iters=30, residual_tol=1e-14))
    assert rep.iters > 0 and _monotone(rep.history, rep.history[0]["energy"])


@pytest.mark.parametrize("seed", range(20))
def test_random_perturbed_equator_monotone(seed):
    rng = np.random.default_rng(seed)
    bump = CircleMap.random(3, 4, rng, decay=2.0) * 0.05
    u = pointwise_compose(equator(16) + bump, S2.nearest_point)
    rep = solve_half_harmonic(u, S2, SolverConfig(max_iters=60))
    assert _monotone(rep.history, rep.history[0]["energy"])


def test_equatorial_solve():
    rep = solve_half_harmonic(equator(), S2)
    assert rep.converged and rep.iters == 0 and abs(rep.energy - 2 * np.pi) < 1e-12
    assert certify_free_boundary(rep, S2) == {"conformal": PASS, "boundary_immersive": PASS,
                                              "image_inside_domain": PASS}


def test_perturbed_equator_converges_to_rotated_equator():
    rep = solve_half_harmonic(equator(16, lambda th: th + 0.1 * np.sin(th)), S2)
    assert rep.converged and rep.residual < 1e-8
    assert abs(rep.energy - 2 * np.pi) < 1e-6 and rep.hopf_defect < 1e-6
    th = theta_grid(64)
    assert np.max(np.abs(rep.data(th)[:, 2])) < 1e-8


def test_nonconvergence_is_reported_not_raised():
    rep = solve_half_harmonic(equator(16, lambda th: th + 0.1 * np.sin(th)), S2, SolverConfig(max_iters=2))
    assert not rep.converged and rep.iters == 2 and "residual" in rep.message
    assert certify_free_boundary(rep, S2)["conformal"] == NOT_APPLICABLE


@pytest.mark.parametrize("seed", range(5))
def test_converged_disk_maps_are_conformal(seed):
    rng = np.random.default_rng(seed)
    phase = CircleMap.random(1, 3, rng, decay=2.0) * 0.1
    u = equator(24, lambda th: th + phase(th)[:, 0])
    rep = solve_half_harmonic(u, S2)
    if rep.residual < 1e-8:
        assert rep.hopf_defect < 1e-5


def test_domain_rotation_equivariance():
    cfg = SolverConfig()
    u = equator(16, lambda th: th + 0.1 * np.sin(th) + 0.05 * np.cos(2 * th))
    base = solve_half_harmonic(u, S2, cfg)
    K = cfg.oversample * (2 * 16 + 1)
    alpha = 2 * np.pi * 7 / K            # a shift of the collocation grid
    shifted = solve_half_harmonic(u.rotate_domain(alpha), S2, cfg)
    assert base.converged and shifted.converged
    assert abs(shifted.energy - base.energy) < 1e-10
    assert shifted.data.allclose(base.data.rotate_domain(alpha), atol=1e-10)


def test_target_rotation_equivariance_full_solve():
    c, s = np.cos(0.8), np.sin(0.8)
    Q = np.array([[c, -s, 0], [s, c, 0], [0, 0, -1.0]])
    u = equator(16, lambda th: th + 0.1 * np.sin(th) + 0.05 * np.cos(2 * th))
    base, turned = solve_half_harmonic(u, S2), solve_half_harmonic(u.linear(Q), S2)
    assert base.converged and turned.converged
    assert abs(turned.energy - base.energy) < 1e-10
    assert turned.data.allclose(base.data.linear(Q), atol=1e-10)


def test_generic_target_rotation_equivariance(rng):
    # the equator is a saddle on S^2: a generic rotation seeds its unstable tilt
    # mode with rounding error, which grows ~1.4x per step, so compare early iterates
    cfg = SolverConfig(max_iters=25, residual_tol=1e-14)
    u = equator(16, lambda th: th + 0.1 * np.sin(th) + 0.05 * np.cos(2 * th))
    Q = random_rotation(rng)
    base, turned = solve_half_harmonic(u, S2, cfg), solve_half_harmonic(u.linear(Q), S2, cfg)
    assert abs(turned.energy - base.energy) < 1e-10
    assert turned.data.allclose(base.data.linear(Q), atol=1e-10)


def test_ellipsoid_target_equator():
    E = Ellipsoid(axes=(1.0, 1.0, 0.5))
    rep = solve_half_harmonic(equator(), E)
    assert rep.converged and abs(rep.energy - 2 * np.pi) < 1e-12


def test_constant_map_fails_immersivity():
    u = CircleMap.constant([0.0, 0.0, 1.0], 4)
    rep = solve_half_harmonic(u, S2)
    flags = certify_free_boundary(rep, S2)
    assert rep.converged and flags["boundary_immersive"] == FAIL and flags["conformal"] == PASS


class _Fragile(Sphere):
    def nearest_point(self, x):
        x = np.asarray(x, dtype=float)
        if np.max(np.abs(np.linalg.norm(x, axis=-1) - 1)) > 1e-9:
            raise ManifoldDomainError("trial left the tube")
        return super().nearest_point(x)


def test_step_size_error_after_halvings():
    with pytest.raises(StepSizeError):
        gradient_step(viviani(), _Fragile(), SolverConfig(step_size=1.0, max_halvings=3))
    rep = solve_half_harmonic(viviani(), _Fragile(), SolverConfig(step_size=1.0, max_halvings=3))
    assert not rep.converged and "tube" in rep.message


def test_report_serialization():
    rep = solve_half_harmonic(equator(4), S2)
    obj = json.loads(json.dumps(rep.to_json()))
    assert obj["converged"] and obj["maps"][0]["N"] == 4
    assert rep.history_csv().splitlines()[0] == "iter,energy,residual,t,dE_dt"


# ----------------------------------------------------------------------
# annulus
# ----------------------------------------------------------------------

def catenoid_data(N=32, t=None):
    orc = catenoid_oracle()
    a, b = CircleMap.from_function(orc.inner, N), CircleMap.from_function(orc.outer, N)
    return AnnulusBoundaryData(a, b, orc.t_star if t is None else t), orc


def test_catenoid_orthogonality_witness():
    res = [el_residual(catenoid_data(N)[0], S2).norm for N in (8, 16, 32)]
    assert res[-1] < 1e-3
    assert all(r2 <= r1 + 1e-13 for r1, r2 in zip(res, res[1:]))


@pytest.mark.parametrize("t0", [1.3, 2.0, 30.0])
def test_critical_t_finds_catenoid(t0):
    d, orc = catenoid_data(16, t0)
    assert abs(critical_t(d) - orc.t_star) < 1e-10


def test_teichmuller_catenoid():
    d, orc = catenoid_data(32, 2.0)
    rep = teichmuller_solve(d, S2)
    assert rep.converged and abs(rep.dE_dt) < 1e-6 and rep.hopf_defect < 1e-4
    assert abs(rep.t - orc.t_star) < 1e-8
    assert all(v == PASS for v in certify_free_boundary(rep, S2).values())
    for row in rep.history:
        assert abs(row["integrand_mean"] + 4 * row["hopf_c"]) < 1e-6


def test_constants_have_no_critical_t():
    d = AnnulusBoundaryData(CircleMap.constant([0.0, 0.0, -1.0], 2), CircleMap.constant([0.0, 0.0, 1.0], 2), 2.0)
    with pytest.raises(DegenerateAnnulusError):
        critical_t(d)
    with pytest.raises(DegenerateAnnulusError):
        teichmuller_solve(d, S2)


def test_noncritical_t_witness():
    e = equator(4)
    rep = solve_half_harmonic(AnnulusBoundaryData(e, e, 2.0), S2)
    assert rep.converged and rep.residual < 1e-12
    assert np.isclose(rep.dE_dt, 8 * np.pi / 9) and np.isclose(rep.hopf_c, -2 / 9)
    assert np.allclose(hopf_boundary_integrand(rep.data, 1.4), -4 * rep.hopf_c)
