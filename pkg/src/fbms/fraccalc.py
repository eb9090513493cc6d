"""
Fractional commutators and exactly checkable operator identities.

Operators act either on band-limited circle maps (``CircleMap``; products
are exact trigonometric products, so nothing aliases) or on samples of a
decaying function on the line (``LineSample``; multipliers act on the
spectrum of the period-2L extension and products are pointwise, so each
product is screened for aliasing).

With D = (-Delta)^{1/4} and R the Riesz (Hilbert) transform:

    T(Q, v)   = D(Qv) + (DQ)v - Q(Dv)
    U(Q, v)   = -RD(Qv) + (RDQ)v + Q(RDv)
    T*(P, Q)  = (DP)Q + P(DQ) - D(PQ)
    U*(P, Q)  = (RDP)Q + P(RDQ) - RD(PQ)
    Lam(Q, v) = Qv + R(Q Rv)
    F(f, v)   = Rf Rv - fv
"""

from __future__ import annotations

from dataclasses import dataclass, field, asdict

import numpy as np

from .circle import (CircleMap, frac_laplacian, from_samples, gagliardo_double_integral, half_seminorm_sq,
                     multiply, riesz_transform, theta_grid, to_samples)

ALIAS_TOL = 1e-8


# ----------------------------------------------------------------------
# line samples
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class LineSample:
    """Samples at x_j = -L + j h, j = 0..K-1, h = 2L/K, of a function decaying at infinity.

    ``values`` has shape (K,) or (K, m).  ``aliased`` records whether any
    product that produced these samples put more than ALIAS_TOL of its
    spectral energy into the top decile of frequencies.
    """

    values: np.ndarray
    L: float
    aliased: bool = False
    decay_tol: float = 1e-10

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.ndim not in (1, 2) or v.shape[0] < 4:
            raise ValueError("values must be (K,) or (K, m) with K >= 4")
        if not self.L > 0:
            raise ValueError("half-width L must be positive")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def K(self) -> int:
        return self.values.shape[0]

    @property
    def h(self) -> float:
        return 2 * self.L / self.K

    @property
    def x(self) -> np.ndarray:
        return -self.L + self.h * np.arange(self.K)

    @property
    def boundary_residual(self) -> float:
        """Largest magnitude among the two end samples (the periodic proxy seam)."""
        return float(max(np.max(np.abs(self.values[0])), np.max(np.abs(self.values[-1]))))

    @property
    def decays(self) -> bool:
        return self.boundary_residual < self.decay_tol

    @classmethod
    def from_function(cls, f, L: float, K: int, decay_tol: float = 1e-10) -> "LineSample":
        x = -L + (2 * L / K) * np.arange(K)
        return cls(np.asarray(f(x), dtype=float), L, decay_tol=decay_tol)

    def _new(self, values, aliased=False) -> "LineSample":
        return LineSample(values, self.L, self.aliased or aliased, self.decay_tol)

    def _check(self, other: "LineSample"):
        if other.K != self.K or other.L != self.L:
            raise ValueError("line samples live on different grids")

    def __add__(self, other):
        self._check(other)
        return LineSample(self.values + other.values, self.L, self.aliased or other.aliased, self.decay_tol)

    def __sub__(self, other):
        self._check(other)
        return LineSample(self.values - other.values, self.L, self.aliased or other.aliased, self.decay_tol)

    def __neg__(self):
        return self._new(-self.values)

    def __mul__(self, s: float):
        return self._new(self.values * float(s))

    __rmul__ = __mul__

    def wavenumbers(self) -> np.ndarray:
        return np.pi * np.fft.fftfreq(self.K, d=1.0 / self.K) / self.L

    def multiplier(self, symbol) -> "LineSample":
        """Apply symbol(xi) on the discrete spectrum of the periodic extension."""
        spec = np.fft.fft(self.values, axis=0)
        sym = symbol(self.wavenumbers())
        if spec.ndim == 2:
            sym = sym[:, None]
        return self._new(np.fft.ifft(spec * sym, axis=0).real)

    def top_decile_fraction(self) -> float:
        spec = np.abs(np.fft.fft(self.values, axis=0)) ** 2
        if spec.ndim == 2:
            spec = spec.sum(axis=1)
        k = np.abs(np.fft.fftfreq(self.K, d=1.0 / self.K))
        total = spec.sum()
        return float(spec[k > 0.9 * k.max()].sum() / total) if total > 0 else 0.0


# ----------------------------------------------------------------------
# dispatch
# ----------------------------------------------------------------------

def half_laplacian_quarter(u):
    """(-Delta)^{1/4}."""
    if isinstance(u, CircleMap):
        return frac_laplacian(u, 0.25)
    return u.multiplier(lambda xi: np.sqrt(np.abs(xi)))


def half_laplacian(u):
    """(-Delta)^{1/2}."""
    if isinstance(u, CircleMap):
        return frac_laplacian(u, 0.5)
    return u.multiplier(np.abs)


def riesz(u):
    """Hilbert transform, symbol -i sgn(xi)."""
    if isinstance(u, CircleMap):
        return riesz_transform(u)
    return u.multiplier(lambda xi: -1j * np.sign(xi))


def product(u, v):
    """Pointwise product; dot product for two vector-valued operands of equal size."""
    if isinstance(u, CircleMap) and isinstance(v, CircleMap):
        return multiply(u, v)
    if isinstance(u, LineSample) and isinstance(v, LineSample):
        u._check(v)
        a, b = u.values, v.values
        if a.ndim == 2 and b.ndim == 2:
            p = np.sum(a * b, axis=1)
        elif a.ndim == 2:
            p = a * b[:, None]
        elif b.ndim == 2:
            p = a[:, None] * b
        else:
            p = a * b
        out = LineSample(p, u.L, u.aliased or v.aliased, u.decay_tol)
        return LineSample(p, u.L, out.aliased or out.top_decile_fraction() > ALIAS_TOL, u.decay_tol)
    raise TypeError("operands must both be CircleMap or both LineSample")


_D, _R, _mul = half_laplacian_quarter, riesz, product


def _RD(u):
    return _R(_D(u))


def T(Q, v):
    return _D(_mul(Q, v)) + _mul(_D(Q), v) - _mul(Q, _D(v))


def U(Q, v):
    return -_RD(_mul(Q, v)) + _mul(_RD(Q), v) + _mul(Q, _RD(v))


def T_star(P, Q):
    return _mul(_D(P), Q) + _mul(P, _D(Q)) - _D(_mul(P, Q))


def U_star(P, Q):
    return _mul(_RD(P), Q) + _mul(P, _RD(Q)) - _RD(_mul(P, Q))


def Lam(Q, v):
    return _mul(Q, v) + _R(_mul(Q, _R(v)))


def F(f, v):
    return _mul(_R(f), _R(v)) - _mul(f, v)


def commutators(P, Q, v, f) -> dict:
    """All six commutators for one set of operands."""
    return {"T": T(Q, v), "U": U(Q, v), "T_star": T_star(P, Q), "U_star": U_star(P, Q),
            "Lambda": Lam(Q, v), "F": F(f, v)}


def aliasing_flag(*results) -> bool:
    """True if any line-sample result was produced by an aliasing product."""
    return any(getattr(r, "aliased", False) for r in results)


# ----------------------------------------------------------------------
# norms and integrals
# ----------------------------------------------------------------------

def l2(u) -> float:
    if isinstance(u, CircleMap):
        return float(np.sqrt(2 * np.pi * np.sum(np.abs(u.coeffs) ** 2)))
    return float(np.sqrt(u.h * np.sum(u.values ** 2)))


def integral(u) -> float:
    if isinstance(u, CircleMap):
        return float(2 * np.pi * np.sum(u.mean))
    return float(u.h * np.sum(u.values))


# ----------------------------------------------------------------------
# diagnostics
# ----------------------------------------------------------------------

@dataclass
class Diagnostic:
    name: str
    residual: float
    tolerance: float
    grid_params: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return bool(np.isfinite(self.residual) and self.residual < self.tolerance)

    def to_json(self) -> dict:
        out = asdict(self)
        out["pass"] = self.passed
        return out


def crw_identity_check(f: CircleMap, v: CircleMap) -> dict:
    """Residual of R(fv - Rf Rv) = f Rv + v Rf, with zero-mode bookkeeping.

    On the circle the identity holds for every pair of trigonometric
    polynomials, means included: for output mode n != 0 the symbol identity
    sgn(n)(1 + sgn j sgn k) = sgn j + sgn k also covers j = 0 or k = 0, and
    at n = 0 both sides have zero mean.  ``zero_mode_correction`` reports the
    mean mismatch, which therefore comes out at rounding level.
    """
    lhs = riesz(multiply(f, v) - multiply(riesz(f), riesz(v)))
    rhs = multiply(f, riesz(v)) + multiply(v, riesz(f))
    diff = lhs - rhs
    zero = float(np.max(np.abs(diff.mean)))
    worst = int(diff.modes[int(np.argmax(np.max(np.abs(diff.coeffs), axis=0)))])
    return {"residual": l2(diff), "zero_mode_correction": zero,
            "offending_mode": worst if l2(diff) > 1e-12 else None}


def duality_residuals(P: CircleMap, Q: CircleMap, v: CircleMap) -> dict:
    """|int P T(Q,v) - int T*(P,Q) v| and the same for U, U*."""
    return {"T": abs(integral(multiply(P, T(Q, v))) - integral(multiply(T_star(P, Q), v))),
            "U": abs(integral(multiply(P, U(Q, v))) - integral(multiply(U_star(P, Q), v)))}


def u_star_decomposition_residual(P: CircleMap, Q: CircleMap) -> float:
    """U*(P,Q) - [R T*(P,Q) + Lam(P, RD Q) + Lam(Q, RD P)] in L^2."""
    rhs = riesz(T_star(P, Q)) + Lam(P, _RD(Q)) + Lam(Q, _RD(P))
    return l2(U_star(P, Q) - rhs)


def u_decomposition_residual(Q: CircleMap, v: CircleMap) -> float:
    """U(Q,v) - [-T(Q,Rv) - F(DQ, Rv) + D Lam(Q, Rv)] in L^2."""
    Rv = riesz(v)
    rhs = -T(Q, Rv) - F(_D(Q), Rv) + _D(Lam(Q, Rv))
    return l2(U(Q, v) - rhs)


def t_star_pointwise_min(w: CircleMap, K: int | None = None) -> float:
    """Smallest sample of T*(w, w); nonnegative because D has a positive kernel."""
    ts = T_star(w, w)
    K = K or 4 * (2 * ts.N + 1)
    return float(np.min(to_samples(ts, K)))


def algebraic_identity_residual(samples: np.ndarray) -> float:
    """max over sample pairs of the defect in

        (a - b).a + a.(a - b) - (a.a - b.b) = |a - b|^2.
    """
    a = np.asarray(samples, dtype=float)
    if a.ndim == 1:
        a = a[:, None]
    A, B = a[:, None, :], a[None, :, :]
    d = A - B
    lhs = np.sum(d * A, axis=2) + np.sum(A * d, axis=2) - (np.sum(A * A, axis=2) - np.sum(B * B, axis=2))
    return float(np.max(np.abs(lhs - np.sum(d * d, axis=2))))


def normal_part_bound_check(w: CircleMap, manifold, K: int | None = None, eps: float = 1e-12) -> dict:
    """Ratio |P^N(w) D w| / (|T*(w,w)| + eps) on a grid, and the quoted polynomial identity.

    For a sphere of radius r and |w| = r, T*(w,w) = 2 w.Dw and the ratio is
    1/(2r) wherever T* is nonzero.
    """
    ts = T_star(w, w)
    K = K or 4 * (2 * ts.N + 1)
    W = to_samples(w, K)
    Dw = to_samples(half_laplacian_quarter(w), K)
    lhs = np.linalg.norm(manifold.project_normal(W, Dw), axis=1)
    rhs = np.abs(to_samples(ts, K)[:, 0])
    ratio = lhs / (rhs + eps)
    return {"max_ratio": float(np.max(ratio)), "min_T_star": float(np.min(to_samples(ts, K))),
            "max_lhs": float(np.max(lhs)), "identity_residual": algebraic_identity_residual(W)}


def seminorm_identity_check(v: CircleMap, K: int = 512) -> Diagnostic:
    """Double-integral form of the H^{1/2} seminorm against its Fourier form.

    iint |v(a) - v(b)|^2 / |e^{ia} - e^{ib}|^2 da db = 4 pi^2 sum |k| |v_k|^2,
    i.e. 2 pi times the Dirichlet energy of the harmonic extension.
    """
    lhs = gagliardo_double_integral(v, K)
    rhs = 2 * np.pi * half_seminorm_sq(v)
    return Diagnostic("seminorm_fourier_vs_double_integral", abs(lhs - rhs) / max(abs(rhs), 1e-300), 1e-3,
                      {"K": K, "N": v.N}, {"double_integral": lhs, "fourier": rhs})


# ----------------------------------------------------------------------
# stereographic transfer
# ----------------------------------------------------------------------

def stereo(theta) -> np.ndarray:
    """Pi(e^{i theta}) = cos(theta) / (1 - sin(theta)); infinite at theta = pi/2."""
    theta = np.asarray(theta, dtype=float)
    with np.errstate(divide="ignore"):
        return np.cos(theta) / (1.0 - np.sin(theta))


def stereo_inverse(x) -> np.ndarray:
    """Angle of Pi^{-1}(x) = i + 2/(x + i): cos = 2x/(1+x^2), sin = (x^2-1)/(x^2+1)."""
    x = np.asarray(x, dtype=float)
    return np.arctan2(x * x - 1.0, 2 * x)


def stereographic_transfer(g: CircleMap, L: float, K: int) -> LineSample:
    """Samples of g o Pi^{-1} on the line grid (exact evaluation of the circle map)."""
    x = -L + (2 * L / K) * np.arange(K)
    vals = g(stereo_inverse(x))
    return LineSample(vals[:, 0] if g.m == 1 else vals, L)


def line_to_circle(w, N: int, at_infinity: float = 0.0, oversample: int = 4) -> CircleMap:
    """w o Pi as a circle map of order N.

    ``w`` is a callable on the line or a LineSample (linear interpolation,
    zero outside its window); the pole theta = pi/2 gets ``at_infinity``.
    """
    K = oversample * (2 * N + 1)
    th = theta_grid(K)
    pole = np.abs(1.0 - np.sin(th)) < 1e-14
    x = np.where(pole, 0.0, stereo(np.where(pole, 0.0, th)))
    if isinstance(w, LineSample):
        vals = np.interp(x, w.x, w.values, left=0.0, right=0.0)
    else:
        vals = np.asarray(w(x), dtype=float)
    vals = np.where(pole, at_infinity, vals)
    return from_samples(vals, N)


def stereographic_identity_check(w, L: float = 32.0, K: int = 4096, N: int = 512,
                                 window: float = 4.0, tol: float = 1e-3) -> Diagnostic:
    """Both sides of (-Delta)^{1/2} w = 2/(1+x^2) [(-Delta)^{1/2}(w o Pi)] o Pi^{-1} on [-W, W].

    Line side: periodic proxy on [-L, L] with K samples.  Circle side:
    spectral on the order-N circle map w o Pi.  The residual is the L^2
    norm of the difference over the window.
    """
    line = LineSample.from_function(w, L, K)
    lhs = half_laplacian(line)
    g = line_to_circle(w, N)
    x = line.x
    inside = np.abs(x) <= window
    rhs = 2.0 / (1.0 + x[inside] ** 2) * half_laplacian(g)(stereo_inverse(x[inside]))[:, 0]
    res = float(np.sqrt(line.h * np.sum((lhs.values[inside] - rhs) ** 2)))
    tail = float(np.max(np.abs(g.coeffs[:, -max(1, g.N // 10):])))
    return Diagnostic("stereographic_transfer", res, tol,
                      {"L": L, "K": K, "N": N, "window": window},
                      {"line_boundary_residual": line.boundary_residual, "circle_tail": tail,
                       "poorly_decaying": bool(tail > 1e-8)})


def line_seminorm_double_integral(f, K: int = 1024, at_infinity: float = 0.0) -> float:
    """iint_{R^2} |f(x)-f(y)|^2/|x-y|^2 dx dy via x = tan(phi), y = tan(psi).

    The integrand becomes (F(phi) - F(psi))^2 / sin^2(phi - psi) with
    F = f o tan, pi-periodic for decaying f (F(-pi/2) = ``at_infinity``); the
    diagonal is filled with F'(phi)^2 computed spectrally, so the trapezoid
    rule converges fast.
    """
    phi = -np.pi / 2 + np.pi * np.arange(K) / K
    x = np.tan(phi[1:])
    Fv = np.empty(K)
    Fv[0] = at_infinity
    Fv[1:] = np.asarray(f(x), dtype=float)
    k = np.fft.fftfreq(K, d=1.0 / K) * 2  # period pi
    dF = np.fft.ifft(1j * k * np.fft.fft(Fv)).real
    num = (Fv[:, None] - Fv[None, :]) ** 2
    den = np.sin(phi[:, None] - phi[None, :]) ** 2
    np.fill_diagonal(den, 1.0)
    Q = num / den
    np.fill_diagonal(Q, dF ** 2)
    h = np.pi / K
    return float(np.sum(Q) * h * h)


def seminorm_transfer_check(f, K: int = 1024, N: int = 256, tol: float = 1e-3) -> Diagnostic:
    """Line double integral of f against the circle double integral of f o Pi."""
    lhs = line_seminorm_double_integral(f, K)
    rhs = gagliardo_double_integral(line_to_circle(f, N), K)
    return Diagnostic("seminorm_stereographic_change_of_variables", abs(lhs - rhs) / max(abs(rhs), 1e-300),
                      tol, {"K": K, "N": N}, {"line": lhs, "circle": rhs})


# ----------------------------------------------------------------------
# suite
# ----------------------------------------------------------------------

def _real_random(rng, N, m=1, decay=1.0, zero_mean=False):
    u = CircleMap.random(m, N, rng, decay=decay)
    if zero_mean:
        c = u.coeffs.copy()
        c[:, N] = 0.0
        u = CircleMap(c)
    return u


def fraccalc_suite(seed: int = 0, N: int = 12) -> list[Diagnostic]:
    """Every identity check on seeded random inputs; one Diagnostic each."""
    from .manifolds import Sphere

    rng = np.random.default_rng(seed)
    P, Q, v, f = (_real_random(rng, N) for _ in range(4))
    out = []
    fz, vz = _real_random(rng, N, zero_mean=True), _real_random(rng, N, zero_mean=True)
    out.append(Diagnostic("crw_identity", crw_identity_check(fz, vz)["residual"], 1e-10, {"N": N}))
    crw_mean = crw_identity_check(f, v)
    out.append(Diagnostic("crw_identity_with_means", crw_mean["residual"], 1e-10, {"N": N},
                          {"zero_mode_correction": crw_mean["zero_mode_correction"]}))
    dual = duality_residuals(P, Q, v)
    out.append(Diagnostic("T_duality", dual["T"], 1e-10, {"N": N}))
    out.append(Diagnostic("U_duality", dual["U"], 1e-10, {"N": N}))
    out.append(Diagnostic("U_star_decomposition", u_star_decomposition_residual(P, Q), 1e-10, {"N": N}))
    out.append(Diagnostic("U_decomposition", u_decomposition_residual(Q, v), 1e-10, {"N": N}))
    out.append(Diagnostic("T_star_symmetry", l2(T_star(P, Q) - T_star(Q, P)), 1e-12, {"N": N}))
    out.append(Diagnostic("T_star_nonnegative", max(0.0, -t_star_pointwise_min(v)), 1e-8, {"N": N}))
    const = CircleMap.constant([1.7], N)
    out.append(Diagnostic("T_constant_Q", l2(T(const, v)) + l2(U(const, v)), 1e-12, {"N": N}))
    w = CircleMap.from_function(lambda th: np.stack([np.cos(th), np.sin(th)], 1), 1)
    npb = normal_part_bound_check(w, Sphere(dim=2))
    out.append(Diagnostic("normal_part_identity", npb["identity_residual"], 1e-12, {"N": 1},
                          {"max_ratio": npb["max_ratio"]}))
    out.append(seminorm_identity_check(_real_random(rng, N)))
    out.append(seminorm_transfer_check(lambda x: 1.0 / (1.0 + x * x)))
    for L, K in ((16.0, 1024), (32.0, 4096)):
        d = stereographic_identity_check(lambda x: x / (1 + x * x) ** 2, L=L, K=K)
        d.name = f"stereographic_transfer_L{int(L)}_K{K}"
        out.append(d)
    return out
