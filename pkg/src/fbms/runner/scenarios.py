"""
Run configurations and the scenario registry.

A scenario turns a validated :class:`RunConfig` into a
:class:`ScenarioResult`: a JSON-ready report, an optional iteration history
(CSV text), an optional OBJ writer, and a status of ``pass``, ``fail``
(ran to completion but a check failed) or ``nonconverged``.
"""

from __future__ import annotations

from dataclasses import dataclass, field, asdict
from typing import Callable

import numpy as np

from ..annulus import (AnnulusBoundaryData, annulus_energy, conformality_defect, dtn_inner, dtn_outer,
                       energy_derivative_t, export_obj, hopf_boundary_integrand)
from ..circle import CircleMap
from ..manifolds import manifold_from_config
from ..solver import (FAIL, PASS, DegenerateAnnulusError, SolverConfig, certify_free_boundary, critical_t,
                      el_residual, solve_half_harmonic, teichmuller_solve)
from ..uniformize import MetricAnnulus, refinement_study, uniformize
from ..fraccalc import fraccalc_suite
from .oracles import catenoid_oracle

STATUS_PASS, STATUS_FAIL, STATUS_NONCONVERGED = "pass", "fail", "nonconverged"


class ConfigError(ValueError):
    """The run configuration is invalid."""


@dataclass
class RunConfig:
    scenario: str
    geometry: dict = field(default_factory=dict)      # {"kind": "disk"} or {"kind": "annulus", "t0": .., "t_bracket": [lo, hi]}
    manifold: dict = field(default_factory=lambda: {"kind": "sphere", "radius": 1.0})
    N: int | None = None
    solver: dict = field(default_factory=dict)
    outputs: dict = field(default_factory=dict)       # {"report": ..., "history": ..., "obj": ...}
    seed: int = 0
    params: dict = field(default_factory=dict)
    name: str | None = None

    @property
    def label(self) -> str:
        return self.name or self.scenario

    @classmethod
    def from_dict(cls, obj) -> "RunConfig":
        if not isinstance(obj, dict):
            raise ConfigError("a run configuration must be a JSON object")
        unknown = set(obj) - set(cls.__dataclass_fields__)
        if unknown:
            raise ConfigError(f"unknown configuration keys: {sorted(unknown)}")
        if "scenario" not in obj:
            raise ConfigError("configuration needs a 'scenario'")
        cfg = cls(**obj)
        cfg.validate()
        return cfg

    def solver_config(self) -> SolverConfig:
        opts = dict(self.solver)
        bracket = self.geometry.get("t_bracket")
        if bracket is not None:
            opts.setdefault("t_min", float(bracket[0]))
            opts.setdefault("t_max", float(bracket[1]))
        return SolverConfig.from_dict(opts)

    def validate(self) -> None:
        sc = SCENARIOS.get(self.scenario)
        if sc is None:
            raise ConfigError(f"unknown scenario {self.scenario!r}; see 'fbms list-scenarios'")
        kind = self.geometry.get("kind", sc.geometry)
        if sc.geometry != "none" and kind != sc.geometry:
            raise ConfigError(f"scenario {self.scenario!r} needs geometry {sc.geometry!r}, got {kind!r}")
        if kind == "annulus":
            t0 = self.geometry.get("t0")
            if t0 is not None and not float(t0) > 1:
                raise ConfigError("annulus t0 must exceed 1")
            br = self.geometry.get("t_bracket")
            if br is not None and not (len(br) == 2 and 1 < float(br[0]) < float(br[1])):
                raise ConfigError("t_bracket must be [lo, hi] with 1 < lo < hi")
        if self.N is not None:
            if not (isinstance(self.N, int) and self.N >= 1):
                raise ConfigError("N must be a positive integer")
            if self.N < sc.min_N:
                raise ConfigError(f"scenario {self.scenario!r} needs N >= {sc.min_N}")
        unknown = set(self.params) - set(sc.params)
        if unknown:
            raise ConfigError(f"unknown parameters for {self.scenario!r}: {sorted(unknown)}")
        unknown = set(self.outputs) - {"report", "history", "obj"}
        if unknown:
            raise ConfigError(f"unknown output keys: {sorted(unknown)}")
        try:
            self.solver_config()
            if sc.geometry != "none":
                manifold_from_config(self.manifold)
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc

    def param(self, key):
        return self.params.get(key, SCENARIOS[self.scenario].params[key])

    def to_json(self) -> dict:
        return asdict(self)


@dataclass
class ScenarioResult:
    report: dict
    status: str
    history: str | None = None
    write_obj: Callable | None = None


@dataclass(frozen=True)
class Scenario:
    run: Callable
    geometry: str               # "disk", "annulus" or "none"
    description: str
    default_N: int = 16
    min_N: int = 1
    params: dict = field(default_factory=dict)


def _n(cfg: RunConfig) -> int:
    return cfg.N if cfg.N is not None else SCENARIOS[cfg.scenario].default_N


def _equator(N: int, phase=None) -> CircleMap:
    def f(th):
        ph = th if phase is None else phase(th)
        return np.stack([np.cos(ph), np.sin(ph), np.zeros_like(th)], axis=1)
    return CircleMap.from_function(f, N)


def _status(converged: bool, ok: bool) -> str:
    if not converged:
        return STATUS_NONCONVERGED
    return STATUS_PASS if ok else STATUS_FAIL


def _solve_disk(cfg: RunConfig, u: CircleMap, energy_target: float, energy_tol: float) -> ScenarioResult:
    M = manifold_from_config(cfg.manifold)
    rep = solve_half_harmonic(u, M, cfg.solver_config())
    rep.flags = certify_free_boundary(rep, M)
    out = rep.to_json()
    out["energy_target"] = energy_target
    out["energy_error"] = abs(rep.energy - energy_target)
    ok = out["energy_error"] < energy_tol and all(v == PASS for v in rep.flags.values())
    return ScenarioResult(out, _status(rep.converged, ok), rep.history_csv())


# ----------------------------------------------------------------------
# scenarios
# ----------------------------------------------------------------------

def equatorial_disk(cfg: RunConfig) -> ScenarioResult:
    """Equator of the unit sphere: an exact critical point with energy 2 pi."""
    return _solve_disk(cfg, _equator(_n(cfg)), 2 * np.pi, 1e-8)


def perturbed_equator(cfg: RunConfig) -> ScenarioResult:
    """Equator reparametrized by theta + eps sin(theta); relaxes back to a rotated equator."""
    eps = float(cfg.param("epsilon"))
    u = _equator(_n(cfg), lambda th: th + eps * np.sin(th))
    return _solve_disk(cfg, u, 2 * np.pi, 1e-6)


def _annulus_t(cfg: RunConfig, default: float) -> float:
    return float(cfg.geometry.get("t0", default))


def annulus_constants(cfg: RunConfig) -> ScenarioResult:
    """Constant traces p, q: energy 2 pi |q-p|^2 / log t and no interior critical t."""
    t = _annulus_t(cfg, float(np.e))
    p, q = np.atleast_1d(np.asarray(cfg.param("p"), float)), np.atleast_1d(np.asarray(cfg.param("q"), float))
    N = _n(cfg)
    d = AnnulusBoundaryData(CircleMap.constant(p, N), CircleMap.constant(q, N), t)
    E = annulus_energy(d)
    jump = float(np.sum((q - p) ** 2))
    exact = 2 * np.pi * jump / np.log(t)
    dEdt = energy_derivative_t(d)
    dEdt_exact = -2 * np.pi * jump / (t * np.log(t) ** 2)
    try:
        critical_t(d, cfg.solver_config())
        degenerates = False
    except DegenerateAnnulusError:
        degenerates = True
    out = {"t": t, "energy": E, "energy_exact": exact, "energy_error": abs(E - exact),
           "dE_dt": dEdt, "dE_dt_exact": dEdt_exact, "dE_dt_error": abs(dEdt - dEdt_exact),
           "no_interior_critical_t": degenerates, "maps": [d.a.to_json(), d.b.to_json()]}
    ok = out["energy_error"] < 1e-10 and out["dE_dt_error"] < 1e-10 and (degenerates or jump == 0)
    return ScenarioResult(out, _status(True, ok))


def single_mode_annulus(cfg: RunConfig) -> ScenarioResult:
    """Both traces the equator winding k times, at a fixed (non-critical) t.

    The traces are critical at fixed t but dE/dt and the Hopf constant c do
    not vanish: the non-critical side of the conformality criterion.
    """
    k = int(cfg.param("k"))
    t = _annulus_t(cfg, 2.0)
    N = _n(cfg)
    M = manifold_from_config(cfg.manifold)
    a = _equator(N, lambda th: k * th)
    d = AnnulusBoundaryData(a, a, t)
    rep = solve_half_harmonic(d, M, cfg.solver_config())
    d = rep.data
    integrand = hopf_boundary_integrand(d, np.sqrt(d.t))
    out = rep.to_json()
    out["integrand_mean"] = float(np.mean(integrand))
    out["minus_four_c"] = -4 * rep.hopf_c
    out["integrand_identity_error"] = abs(out["integrand_mean"] + 4 * rep.hopf_c)
    out["critical_in_t"] = bool(abs(rep.dE_dt) < cfg.solver_config().t_tol)
    out["conformal"] = bool(abs(rep.hopf_c) < 1e-4)
    ok = out["integrand_identity_error"] < 1e-6 and out["critical_in_t"] == out["conformal"]
    obj = (lambda path: export_obj(d, path)) if d.m == 3 else None
    return ScenarioResult(out, _status(rep.converged, ok), rep.history_csv(), obj)


def catenoid(cfg: RunConfig) -> ScenarioResult:
    """Critical catenoid in the unit ball: Teichmueller search from t0 and certification."""
    orc = catenoid_oracle()
    N = _n(cfg)
    M = manifold_from_config(cfg.manifold)
    scfg = cfg.solver_config()
    a = CircleMap.from_function(orc.inner, N)
    b = CircleMap.from_function(orc.outer, N)
    witness = {}
    for n in sorted({8, 16, N}):
        dn = AnnulusBoundaryData(CircleMap.from_function(orc.inner, n), CircleMap.from_function(orc.outer, n),
                                 orc.t_star)
        witness[str(n)] = el_residual(dn, M, scfg.oversample).norm
    d = AnnulusBoundaryData(a, b, _annulus_t(cfg, 2.0))
    try:
        rep = teichmuller_solve(d, M, scfg)
    except DegenerateAnnulusError as exc:
        out = {"message": str(exc), "converged": False, "t_star": orc.t_star}
        return ScenarioResult(out, STATUS_NONCONVERGED)
    rep.flags = certify_free_boundary(rep, M)
    out = rep.to_json()
    out.update({"s0": orc.s0, "s0_residual": abs(orc.s0 * np.tanh(orc.s0) - 1.0), "scale": orc.scale,
                "t_star": orc.t_star, "t_error": abs(rep.t - orc.t_star),
                "oracle_el_residual": witness,
                "conformality_defect": conformality_defect(rep.data)})
    ok = out["t_error"] < 1e-8 and all(v == PASS for v in rep.flags.values())
    final = rep.data
    return ScenarioResult(out, _status(rep.converged, ok), rep.history_csv(),
                          lambda path: export_obj(final, path))


def _uniformize_run(cfg: RunConfig, make) -> ScenarioResult:
    s = float(cfg.param("modulus"))
    n = int(cfg.param("n"))
    sizes = [int(x) for x in cfg.param("sizes")]
    res = uniformize(make(n))
    study = refinement_study(make, sizes, exact=s)
    rel = abs(res.t - s) / s
    out = {"modulus": s, "n": n, "kappa": res.kappa, "t": res.t, "rel_error": rel,
           "refinement_diagnostics": {**res.to_json(), **study}}
    ok = rel < 1e-3 and min(study["order"]) >= 1.8
    return ScenarioResult(out, _status(True, ok))


def uniformize_flat(cfg: RunConfig) -> ScenarioResult:
    """Flat annulus 1 <= |z| <= s in a linear radial chart, optionally conformally rescaled."""
    s, amp = float(cfg.param("modulus")), float(cfg.param("rescale"))

    def make(n):
        M = MetricAnnulus.flat_pullback(s, n, n)
        return M.rescaled(lambda S, T: amp * np.sin(np.pi * S) * np.cos(T)) if amp else M
    return _uniformize_run(cfg, make)


def uniformize_twisted(cfg: RunConfig) -> ScenarioResult:
    """Flat annulus pulled back through theta -> theta + a sin(pi s)(sin(pi s) + sin(theta)/2)."""
    s, amp = float(cfg.param("modulus")), float(cfg.param("twist"))
    twist = lambda S, T: amp * np.sin(np.pi * S) * (np.sin(np.pi * S) + 0.5 * np.sin(T))
    return _uniformize_run(cfg, lambda n: MetricAnnulus.flat_pullback(s, n, n, twist=twist))


def fraccalc(cfg: RunConfig) -> ScenarioResult:
    """Commutator and transfer identities on seeded random inputs."""
    diags = fraccalc_suite(seed=cfg.seed, N=_n(cfg))
    out = {"diagnostics": [d.to_json() for d in diags]}
    return ScenarioResult(out, _status(True, all(d.passed for d in diags)))


SCENARIOS: dict[str, Scenario] = {
    "equatorial_disk": Scenario(equatorial_disk, "disk", "equator of S^2, exact fixed point (energy 2 pi)"),
    "perturbed_equator": Scenario(perturbed_equator, "disk", "reparametrized equator relaxing to energy 2 pi",
                                  params={"epsilon": 0.1}),
    "annulus_constants": Scenario(annulus_constants, "annulus", "constant traces p, q (energy 2 pi/log t)",
                                  default_N=4, params={"p": [0.0], "q": [1.0]}),
    "single_mode_annulus": Scenario(single_mode_annulus, "annulus",
                                    "k-fold equator on both circles at fixed t (non-critical in t)",
                                    default_N=8, params={"k": 1}),
    "catenoid": Scenario(catenoid, "annulus", "critical catenoid: Teichmueller search and certification",
                         default_N=32),
    "uniformize_flat": Scenario(uniformize_flat, "none", "modulus of a flat annulus metric",
                                params={"modulus": 3.0, "n": 256, "sizes": [32, 64, 128, 256], "rescale": 0.0}),
    "uniformize_twisted": Scenario(uniformize_twisted, "none", "modulus of a twisted flat annulus metric",
                                   params={"modulus": 3.0, "n": 256, "sizes": [32, 64, 128, 256], "twist": 0.7}),
    "fraccalc_suite": Scenario(fraccalc, "none", "commutator, duality and transfer identities",
                               default_N=12),
}


def run_scenario(cfg: RunConfig) -> ScenarioResult:
    cfg.validate()
    return SCENARIOS[cfg.scenario].run(cfg)
