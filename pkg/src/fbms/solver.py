"""
Projected gradient solver for half-harmonic boundary maps.

A boundary configuration is a list of circle maps (one for the disk, the
inner and outer traces for an annulus).  The first variation of the
Dirichlet energy of the harmonic extension is

    dE[phi] = 2 sum_i w_i <DtN_i(u), phi_i>_{L^2(dtheta)},

with boundary length factors w = (1,) on the disk and w = (1, t) on the
annulus, so a map is critical iff the tangential part P^T(u) DtN(u)
vanishes on every boundary circle.  Descent steps move along
-w_i K P^T(u) DtN_i(u), where K is the optional multiplier (1+|n|)^{-1},
then snap the oversampled samples back onto N and re-truncate.

The Teichmueller search alternates a bracketed root-find of dE/dt in t
with capped inner solves at fixed t.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field, asdict

import numpy as np
from scipy.optimize import brentq

from .annulus import (AnnulusBoundaryData, annulus_energy, bilinear_B, dtn_inner, dtn_outer, energy_derivative_t,
                      energy_second_derivative_t,
                      extension_coeffs, extension_eval, extension_gradient, hopf_boundary_integrand,
                      hopf_laurent)
from .circle import CircleMap, ManifoldDomainError, from_samples, theta_grid, to_samples
from .disk import disk_dtn, disk_energy, disk_extension_eval, disk_extension_gradient, disk_hopf

PASS, FAIL, NOT_APPLICABLE = "pass", "fail", "not_applicable"


class StepSizeError(RuntimeError):
    """Every trial step left the projection tube."""


class DegenerateAnnulusError(RuntimeError):
    """The conformal parameter was driven to a guard rail."""


@dataclass
class SolverConfig:
    step_size: float = 0.5
    max_iters: int = 500
    residual_tol: float = 1e-10
    t_tol: float = 1e-8
    use_preconditioner: bool = True
    oversample: int = 4
    armijo_backtrack: bool = True
    armijo_c: float = 1e-4
    max_halvings: int = 30
    # Teichmueller search
    t_min: float = 1.0 + 1e-6
    t_max: float = 1e3
    max_outer: int = 20
    inner_iters: int = 200

    def __post_init__(self):
        if not self.step_size > 0:
            raise ValueError("step_size must be positive")
        if not (self.residual_tol > 0 and self.t_tol > 0):
            raise ValueError("tolerances must be positive")
        if self.oversample < 2:
            raise ValueError("oversample factor must be >= 2")
        if not 1.0 < self.t_min < self.t_max:
            raise ValueError("need 1 < t_min < t_max")

    @classmethod
    def from_dict(cls, obj: dict | None) -> "SolverConfig":
        obj = dict(obj or {})
        unknown = set(obj) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValueError(f"unknown solver options: {sorted(unknown)}")
        return cls(**obj)


@dataclass
class Residual:
    fields: tuple          # P^T(u) DtN_i(u) per boundary circle, as CircleMaps
    norm: float            # sqrt(sum_i w_i ||field_i||^2)
    worst_node: int        # grid index of the largest pointwise residual


@dataclass
class SolveReport:
    geometry: str
    maps: list
    t: float | None
    energy: float
    residual: float
    dE_dt: float | None
    hopf_c: float
    hopf_residual: float
    hopf_defect: float
    iters: int
    converged: bool
    flags: dict = field(default_factory=lambda: {"conformal": NOT_APPLICABLE,
                                                 "boundary_immersive": NOT_APPLICABLE,
                                                 "image_inside_domain": NOT_APPLICABLE})
    history: list = field(default_factory=list)
    message: str = ""
    diagnostics: dict = field(default_factory=dict)

    @property
    def data(self):
        """The final configuration: a CircleMap or AnnulusBoundaryData."""
        if self.geometry == "disk":
            return self.maps[0]
        return AnnulusBoundaryData(self.maps[0], self.maps[1], self.t)

    def to_json(self) -> dict:
        out = {k: v for k, v in asdict(self).items() if k not in ("maps", "history")}
        out["maps"] = [u.to_json() for u in self.maps]
        out["history"] = self.history
        return out

    def history_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["iter", "energy", "residual", "t", "dE_dt"])
        for row in self.history:
            w.writerow([row["iter"]] + [_fmt(row.get(k)) for k in ("energy", "residual", "t", "dE_dt")])
        return buf.getvalue()


def _fmt(x):
    return "" if x is None else repr(float(x))


# ----------------------------------------------------------------------
# configuration helpers
# ----------------------------------------------------------------------

def _unpack(u):
    """(maps, t) from a CircleMap (disk) or AnnulusBoundaryData."""
    if isinstance(u, CircleMap):
        return [u], None
    if isinstance(u, AnnulusBoundaryData):
        return [u.a, u.b], u.t
    raise TypeError(f"expected CircleMap or AnnulusBoundaryData, got {type(u).__name__}")


def _pack(maps, t):
    return maps[0] if t is None else AnnulusBoundaryData(maps[0], maps[1], t)


def _weights(t):
    return (1.0,) if t is None else (1.0, float(t))


def energy(u) -> float:
    """Dirichlet energy of the harmonic extension (disk or annulus)."""
    maps, t = _unpack(u)
    return disk_energy(maps[0]) if t is None else annulus_energy(u)


def _seminorm_form(x: CircleMap, y: CircleMap) -> float:
    return float(2 * np.pi * np.sum(np.abs(x.modes) * np.sum(x.coeffs * np.conj(y.coeffs), axis=0)).real)


def energy_change(u_new, u_old) -> float:
    """E(u_new) - E(u_old) evaluated as Q(u_new - u_old, u_new + u_old).

    E is a quadratic form in the boundary data, so this difference keeps
    full relative accuracy even when both energies agree to many digits.
    """
    new, t = _unpack(u_new)
    old, _ = _unpack(u_old)
    dif = [x - y for x, y in zip(new, old)]
    tot = [x + y for x, y in zip(new, old)]
    val = sum(_seminorm_form(x, y) for x, y in zip(dif, tot))
    if t is not None:
        val += bilinear_B((dif[0], dif[1]), (tot[0], tot[1]), t)
    return float(val)


def _dtn(u) -> list:
    maps, t = _unpack(u)
    if t is None:
        return [disk_dtn(maps[0])]
    return [dtn_inner(u), dtn_outer(u)]


def _grid_size(u, oversample: int) -> int:
    maps, _ = _unpack(u)
    N = max(v.N for v in maps)
    return oversample * (2 * N + 1)


def _tangential(u, manifold, K: int):
    """Samples of P^T(u) DtN_i(u) on K nodes; checks the tube first."""
    maps, _ = _unpack(u)
    out = []
    for v, g in zip(maps, _dtn(u)):
        x = to_samples(v, K)
        try:
            xi = manifold.nearest_point(x)
        except ManifoldDomainError as exc:
            raise ManifoldDomainError(f"el_residual: {exc}") from None
        out.append(manifold.project_tangent(xi, to_samples(g, K)))
    return out


def el_residual(u, manifold, oversample: int = 4) -> Residual:
    """Tangential part of the normal derivative on every boundary circle.

    The projector is evaluated at the nearest point of N to each oversampled
    sample, so truncated maps that sit within the tube are accepted.
    """
    _, t = _unpack(u)
    K = _grid_size(u, oversample)
    tang = _tangential(u, manifold, K)
    w = _weights(t)
    sq = sum(wi * 2 * np.pi * np.mean(np.sum(g ** 2, axis=1)) for wi, g in zip(w, tang))
    point = np.max([np.linalg.norm(g, axis=1) for g in tang], axis=0)
    Nk = (K - 1) // 2
    return Residual(fields=tuple(from_samples(g, Nk) for g in tang), norm=float(np.sqrt(sq)),
                    worst_node=int(np.argmax(point)))


def _precondition(samples: np.ndarray, K: int) -> np.ndarray:
    Nk = (K - 1) // 2
    c = from_samples(samples, Nk)
    return to_samples(c.multiplier(1.0 / (1.0 + np.abs(c.modes))), K)


@dataclass
class StepInfo:
    tau: float
    halvings: int
    energy_before: float
    energy_after: float
    accepted: bool
    energy_change: float


def gradient_step(u, manifold, config: SolverConfig, return_info: bool = False):
    """One projected (and optionally preconditioned) descent step.

    Trial steps are halved when they leave the projection tube and, with
    Armijo backtracking on, until the sufficient-decrease test passes.  Once
    the predicted decrease is below the roundoff floor of the energy, a step
    is accepted if the energy rises by no more than that floor.  If
    no trial is acceptable the input is returned unchanged.
    """
    maps, t = _unpack(u)
    N = [v.N for v in maps]
    K = _grid_size(u, config.oversample)
    w = _weights(t)
    tang = _tangential(u, manifold, K)
    dirs = [wi * (_precondition(g, K) if config.use_preconditioner else g) for wi, g in zip(w, tang)]
    # dE along -dirs is -2 sum_i w_i <g_i, dir_i>
    slope = sum(wi * 2 * np.pi * np.mean(np.sum(g * d, axis=1)) for wi, g, d in zip(w, tang, dirs))
    E0 = energy(u)
    x = [to_samples(v, K) for v in maps]
    tau = config.step_size
    tube_fail = 0
    for k in range(config.max_halvings + 1):
        try:
            new = [from_samples(manifold.nearest_point(xi - tau * d), n) for xi, d, n in zip(x, dirs, N)]
        except ManifoldDomainError:
            tube_fail += 1
            tau *= 0.5
            continue
        cand = _pack(new, t)
        dE = energy_change(cand, u)
        # below `floor` an energy comparison is pure roundoff, since the
        # coefficients of u carry relative noise of order eps
        floor = 16 * np.finfo(float).eps * max(E0, 1.0)
        armijo = dE <= -config.armijo_c * tau * 2 * slope
        noise = tau * 2 * slope < floor and dE <= floor
        if not config.armijo_backtrack or armijo or noise:
            info = StepInfo(tau, k, E0, E0 + dE, True, dE)
            return (cand, info) if return_info else cand
        tau *= 0.5
    if tube_fail == config.max_halvings + 1:
        raise StepSizeError(f"step left the projection tube after {config.max_halvings} halvings")
    info = StepInfo(tau, config.max_halvings, E0, E0, False, 0.0)
    return (u, info) if return_info else u


# ----------------------------------------------------------------------
# diagnostics
# ----------------------------------------------------------------------

def _hopf(u):
    maps, t = _unpack(u)
    if t is None:
        return disk_hopf(maps[0])
    return hopf_laurent(extension_coeffs(u))


def _report(u, manifold, config, iters, converged, history, message="", res=None) -> SolveReport:
    maps, t = _unpack(u)
    if res is None:
        res = el_residual(u, manifold, config.oversample)
    h = _hopf(u)
    return SolveReport(
        geometry="disk" if t is None else "annulus", maps=list(maps), t=t,
        energy=energy(u), residual=res.norm,
        dE_dt=None if t is None else energy_derivative_t(u),
        hopf_c=h.c, hopf_residual=h.residual, hopf_defect=h.defect,
        iters=iters, converged=converged, history=history, message=message,
        diagnostics={"dominant_modes": [_dominant_mode(v) for v in maps]})


def _dominant_mode(v: CircleMap) -> int:
    """Signed frequency carrying the most energy, ignoring the mean (a winding proxy)."""
    if v.N == 0:
        return 0
    amp = np.sum(np.abs(v.coeffs) ** 2, axis=0)
    amp[v.N] = -1.0
    return int(v.modes[int(np.argmax(amp))])


def _row(it, u, res, t, step_change=0.0):
    return {"iter": it, "energy": energy(u), "residual": res, "t": t,
            "dE_dt": None if t is None else energy_derivative_t(u), "energy_change": step_change}


# ----------------------------------------------------------------------
# solves
# ----------------------------------------------------------------------

def solve_half_harmonic(u, manifold, config: SolverConfig | None = None) -> SolveReport:
    """Descend until the tangential residual drops below ``residual_tol``.

    Never raises on non-convergence: failures are recorded in the report.
    """
    config = config or SolverConfig()
    _, t = _unpack(u)
    history = []
    res = el_residual(u, manifold, config.oversample)
    history.append(_row(0, u, res.norm, t))
    it = 0
    message = ""
    while res.norm >= config.residual_tol and it < config.max_iters:
        try:
            u, info = gradient_step(u, manifold, config, return_info=True)
        except (StepSizeError, ManifoldDomainError) as exc:
            message = str(exc)
            break
        it += 1
        if not info.accepted:
            message = "line search stalled"
            break
        res = el_residual(u, manifold, config.oversample)
        history.append(_row(it, u, res.norm, t, info.energy_change))
    converged = res.norm < config.residual_tol
    if not converged and not message:
        message = f"residual {res.norm:.3e} after {it} iterations"
    return _report(u, manifold, config, it, converged, history, message, res)


def critical_t(d: AnnulusBoundaryData, config: SolverConfig | None = None, n_scan: int = 241) -> float:
    """Zero of t -> dE/dt with the traces frozen.

    dE/dt is scanned on a grid uniform in log(t - 1) between the guard rails.
    A sign change nearest to the current t is refined with Brent's method.
    Without one the zero may be tangential (the catenoid is such a case:
    dE/dt <= 0 on both sides of t*), so the zeros of d2E/dt2 are refined
    instead and the one with the smallest |dE/dt| is returned.  If there is
    no interior candidate the annulus degenerates.
    """
    config = config or SolverConfig()
    f = lambda t: energy_derivative_t(d.with_t(t))
    g = lambda s: f(1.0 + np.exp(s))
    s_grid = np.linspace(np.log(config.t_min - 1.0), np.log(config.t_max - 1.0), n_scan)
    vals = np.array([g(s) for s in s_grid])
    s0 = np.log(d.t - 1.0)
    exact = np.nonzero(vals == 0.0)[0]
    change = np.nonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) < 0)[0]
    if exact.size or change.size:
        cands = [(abs(s_grid[i] - s0), "exact", i) for i in exact]
        cands += [(abs(0.5 * (s_grid[i] + s_grid[i + 1]) - s0), "change", i) for i in change]
        _, kind, i = min(cands)
        if kind == "exact":
            return float(1.0 + np.exp(s_grid[i]))
        s = brentq(g, s_grid[i], s_grid[i + 1], xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)
        return float(1.0 + np.exp(s))
    # no crossing: look for a tangential zero, i.e. a simple zero of d2E/dt2
    h = lambda s: energy_second_derivative_t(d.with_t(1.0 + np.exp(s)))
    curv = np.array([h(s) for s in s_grid])
    turns = np.nonzero(np.sign(curv[:-1]) * np.sign(curv[1:]) < 0)[0]
    best = None
    for i in turns:
        s = brentq(h, s_grid[i], s_grid[i + 1], xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)
        if best is None or abs(g(s)) < abs(g(best)):
            best = s
    if best is None:
        i = int(np.argmin(np.abs(vals)))
        raise DegenerateAnnulusError(
            f"dE/dt keeps one sign on [{config.t_min}, {config.t_max}] and is smallest at the "
            f"guard rail t = {1.0 + np.exp(s_grid[i]):.6g}: the annulus degenerates")
    return float(1.0 + np.exp(best))


def teichmuller_solve(d: AnnulusBoundaryData, manifold, config: SolverConfig | None = None) -> SolveReport:
    """Alternate (ii) a bracketed root-find in t and (i) a capped fixed-t solve.

    The root-find runs first because descent at a non-critical t can leave
    the intended critical configuration.  Raises DegenerateAnnulusError when
    no interior critical t exists.
    """
    config = config or SolverConfig()
    inner = SolverConfig(**{**asdict(config), "max_iters": config.inner_iters})
    history = []
    total = 0
    rep = None
    for outer in range(config.max_outer):
        t = critical_t(d, config)
        d = d.with_t(t)
        rep = solve_half_harmonic(d, manifold, inner)
        total += rep.iters
        d = rep.data
        integrand = hopf_boundary_integrand(d, np.sqrt(d.t))
        history.append({"iter": outer, "energy": rep.energy, "residual": rep.residual, "t": d.t,
                        "dE_dt": rep.dE_dt, "hopf_c": rep.hopf_c,
                        "integrand_mean": float(np.mean(integrand))})
        if rep.residual < config.residual_tol and abs(rep.dE_dt) < config.t_tol:
            break
    rep.iters = total
    rep.history = history
    rep.converged = rep.residual < config.residual_tol and abs(rep.dE_dt) < config.t_tol
    rep.message = "" if rep.converged else f"residual {rep.residual:.3e}, dE/dt {rep.dE_dt:.3e}"
    return rep


# ----------------------------------------------------------------------
# certification
# ----------------------------------------------------------------------

def _boundary_gradient(u, K):
    """|du| on every boundary circle, shape (n_circles, K)."""
    maps, t = _unpack(u)
    th = theta_grid(K)
    if t is None:
        dr, dth = disk_extension_gradient(maps[0], np.ones(K), th)
        return [np.sqrt(np.sum(dr ** 2 + dth ** 2, axis=1))]
    ec = extension_coeffs(u)
    out = []
    for r in (1.0, t):
        dr, dth = extension_gradient(ec, np.full(K, r), th)
        out.append(np.sqrt(np.sum(dr ** 2 + dth ** 2, axis=1)))
    return out


def _interior_values(u, n_r, n_theta):
    maps, t = _unpack(u)
    th = theta_grid(n_theta)
    if t is None:
        r = np.arange(1, n_r + 1) / (n_r + 1)
        return disk_extension_eval(maps[0], r[:, None], th[None, :])
    r = np.exp(np.log(t) * np.arange(1, n_r + 1) / (n_r + 1))
    return extension_eval(extension_coeffs(u), r[:, None], th[None, :])


def certify_free_boundary(report: SolveReport, manifold, conformal_tol: float = 1e-4,
                          immersion_factor: float = 1e-3, margin: float = 1e-6,
                          n_theta: int = 256, n_r: int = 64) -> dict:
    """Tri-state flags for the three free-boundary checks.

    conformal: the Hopf coefficients vanish to ``conformal_tol``.
    boundary_immersive: min |du| on the boundary exceeds
        ``immersion_factor`` times its mean (so a constant map fails).
    image_inside_domain: the convex defining function stays below
        1 - ``margin`` on an interior grid.
    Unconverged reports get ``not_applicable`` throughout.
    """
    if not report.converged:
        return {"conformal": NOT_APPLICABLE, "boundary_immersive": NOT_APPLICABLE,
                "image_inside_domain": NOT_APPLICABLE}
    u = report.data
    flags = {"conformal": PASS if report.hopf_defect < conformal_tol else FAIL}
    grads = np.concatenate(_boundary_gradient(u, n_theta))
    tol = immersion_factor * float(np.mean(grads))
    flags["boundary_immersive"] = PASS if float(np.min(grads)) > tol else FAIL
    vals = _interior_values(u, n_r, n_theta)
    flags["image_inside_domain"] = PASS if float(np.max(manifold.level(vals))) < 1.0 - margin else FAIL
    return flags
