"""
Closed forms on the flat annulus A_t = {1 <= |z| <= t}.

Boundary data are two circle maps, ``a`` on |z| = 1 and ``b`` on |z| = t.
The harmonic extension is

    f(r e^{i theta}) = a_0 + c~ log r + sum_{n != 0} (c_n r^n + c'_n r^{-n}) e^{i n theta}

with c~ = (b_0 - a_0)/log t and c_n, c'_n fixed by the two traces.
Every t^{2n} in the textbook fractions is rewritten with q = t^{-n} so
nothing overflows for large n log t.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .circle import CircleMap, half_seminorm_sq, frac_laplacian, theta_grid
from .hopf import HopfLaurent, laurent_square


@dataclass(frozen=True)
class AnnulusBoundaryData:
    a: CircleMap
    b: CircleMap
    t: float

    def __post_init__(self):
        _check_t(self.t)
        if self.a.m != self.b.m:
            raise ValueError("inner and outer traces must share the ambient dimension")
        if self.a.N != self.b.N:
            N = max(self.a.N, self.b.N)
            object.__setattr__(self, "a", self.a.resize(N))
            object.__setattr__(self, "b", self.b.resize(N))

    @property
    def m(self) -> int:
        return self.a.m

    @property
    def N(self) -> int:
        return self.a.N

    def with_t(self, t: float) -> "AnnulusBoundaryData":
        return AnnulusBoundaryData(self.a, self.b, t)

    def swapped(self) -> "AnnulusBoundaryData":
        """Data seen through the inversion z -> t z / |z|^2."""
        return AnnulusBoundaryData(self.b, self.a, self.t)

    def to_json(self) -> dict:
        return {"a": self.a.to_json(), "b": self.b.to_json(), "t": float(self.t)}

    @classmethod
    def from_json(cls, obj) -> "AnnulusBoundaryData":
        if isinstance(obj, str):
            obj = json.loads(obj)
        return cls(CircleMap.from_json(obj["a"]), CircleMap.from_json(obj["b"]), float(obj["t"]))


def _check_t(t: float) -> float:
    if not np.isfinite(t) or t <= 1.0:
        raise ValueError(f"conformal parameter must satisfy t > 1, got {t}")
    return float(t)


def _q(t: float, N: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """n = 1..N, q = t^-n and 1 - q^2 computed without cancellation."""
    n = np.arange(1, N + 1)
    L = np.log(t)
    q = np.exp(-n * L)
    one_m_q2 = -np.expm1(-2.0 * n * L)
    return n, q, one_m_q2


def _pos(u: CircleMap) -> np.ndarray:
    return u.coeffs[:, u.N + 1:]


def _dot(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Per-mode x_n . conj(y_n) summed over components."""
    return np.sum(x * np.conj(y), axis=0)


# ----------------------------------------------------------------------
# harmonic extension
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class ExtensionCoeffs:
    """Coefficients of the harmonic extension; negative modes follow from
    c_{-n} = conj(c'_n) and c'_{-n} = conj(c_n)."""

    t: float
    a0: np.ndarray
    c_tilde: np.ndarray
    c: np.ndarray          # (m, N), modes n = 1..N
    c_prime: np.ndarray    # (m, N)
    a: CircleMap
    b: CircleMap

    @property
    def N(self) -> int:
        return self.c.shape[1]

    def mode(self, n: int) -> tuple[np.ndarray, np.ndarray]:
        """(c_n, c'_n) for any nonzero n."""
        if n > 0:
            return self.c[:, n - 1], self.c_prime[:, n - 1]
        if n < 0:
            return np.conj(self.c_prime[:, -n - 1]), np.conj(self.c[:, -n - 1])
        raise ValueError("mode 0 is described by a0 and c_tilde")

    def _profiles(self, r: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """c_n r^n and c'_n r^-n for n = 1..N, shape (..., m, N), evaluated stably."""
        n, q, den = _q(self.t, self.N)
        A, B = _pos(self.a), _pos(self.b)
        r = np.asarray(r, dtype=float)[..., None, None]
        grow = (r / self.t) ** n * (B - q * A) / den
        decay = r ** (-n) * (A - q * B) / den
        return grow, decay


def extension_coeffs(d: AnnulusBoundaryData) -> ExtensionCoeffs:
    t = _check_t(d.t)
    n, q, den = _q(t, d.N)
    A, B = _pos(d.a), _pos(d.b)
    c = (q * B - q * q * A) / den
    cp = (A - q * B) / den
    return ExtensionCoeffs(t=t, a0=d.a.mean, c_tilde=(d.b.mean - d.a.mean) / np.log(t),
                           c=c, c_prime=cp, a=d.a, b=d.b)


def _check_r(r, t):
    r = np.asarray(r, dtype=float)
    if np.any(r < 1 - 1e-14) or np.any(r > t * (1 + 1e-14)):
        raise ValueError("points must satisfy 1 <= r <= t")
    return r


def extension_eval(ec: ExtensionCoeffs, r, theta) -> np.ndarray:
    """Values of the extension at r e^{i theta}; output shape (..., m)."""
    r = _check_r(r, ec.t)
    r, theta = np.broadcast_arrays(r, np.asarray(theta, dtype=float))
    out = ec.a0 + ec.c_tilde * np.log(r)[..., None]
    if ec.N:
        grow, decay = ec._profiles(r)
        e = np.exp(1j * theta[..., None] * np.arange(1, ec.N + 1))[..., None, :]
        out = out + 2.0 * np.sum(((grow + decay) * e).real, axis=-1)
    return out


def extension_gradient(ec: ExtensionCoeffs, r, theta) -> tuple[np.ndarray, np.ndarray]:
    """(d/dr, (1/r) d/dtheta) of the extension, each of shape (..., m)."""
    r = _check_r(r, ec.t)
    r, theta = np.broadcast_arrays(r, np.asarray(theta, dtype=float))
    dr = ec.c_tilde / r[..., None] * np.ones(ec.a0.shape)
    dth = np.zeros_like(dr)
    if ec.N:
        n = np.arange(1, ec.N + 1)
        grow, decay = ec._profiles(r)
        e = np.exp(1j * theta[..., None] * n)[..., None, :]
        rr = r[..., None, None]
        dr = dr + 2.0 * np.sum((n * (grow - decay) / rr * e).real, axis=-1)
        dth = dth + 2.0 * np.sum((1j * n * (grow + decay) / rr * e).real, axis=-1)
    return dr, dth


# ----------------------------------------------------------------------
# energy
# ----------------------------------------------------------------------

def bilinear_B(ab: tuple[CircleMap, CircleMap], cd: tuple[CircleMap, CircleMap], t: float) -> float:
    """Coupling form B_t((a, b), (c, d)) truncated to the common order."""
    t = _check_t(t)
    a, b = ab
    c, d = cd
    N = max(a.N, b.N, c.N, d.N)
    a, b, c, d = (u.resize(N) for u in (a, b, c, d))
    val = 2 * np.pi * float(np.dot(b.mean - a.mean, d.mean - c.mean)) / np.log(t)
    if N == 0:
        return val
    n, q, den = _q(t, N)
    A, Bc, C, D = _pos(a), _pos(b), _pos(c), _pos(d)
    diag = (_dot(A, C) + _dot(Bc, D)).real
    cross = (_dot(A, D) + _dot(Bc, C)).real
    terms = 8 * np.pi * n * (q * q * diag - q * cross) / den
    return val + float(np.sum(terms))


def annulus_energy(d: AnnulusBoundaryData) -> float:
    """Dirichlet energy of the harmonic extension on A_t."""
    _check_t(d.t)
    return half_seminorm_sq(d.a) + half_seminorm_sq(d.b) + bilinear_B((d.a, d.b), (d.a, d.b), d.t)


def bilinear_bound_constant(t: float, s: float, N: int) -> float:
    """Smallest C with |B_t((a,b),(a,b))| <= C (|a|_{H^s}^2 + |b|_{H^s}^2) on order-N data.

    Mode n > 0 contributes the 2x2 form 8 pi n/(t^{2n}-1) [[1, -t^n], [-t^n, 1]]
    whose spectral radius is 8 pi n/(t^n - 1); the mean pair gives 4 pi/log t.
    """
    t = _check_t(t)
    consts = [4 * np.pi / np.log(t)]
    if N:
        n, q, _ = _q(t, N)
        # 8 pi n / (t^n - 1) over the H^s weight 2 (1+n^2)^s of the pair (n, -n)
        consts.extend(4 * np.pi * n * q / (1 - q) / (1.0 + n ** 2) ** s)
    return float(max(consts))


# ----------------------------------------------------------------------
# Dirichlet-to-Neumann
# ----------------------------------------------------------------------

def remainder_R(a: CircleMap, b: CircleMap, t: float) -> CircleMap:
    """Smoothing remainder R_t[a, b] with both frequency branches written out.

    n > 0 :  2n/(t^{2n}-1) (a_n - t^n b_n)
    n < 0 :  2n/(t^{2n}-1) (t^{2n} a_n - t^n b_n)
    n = 0 :  -(b_0 - a_0)/log t
    """
    t = _check_t(t)
    N = max(a.N, b.N)
    a, b = a.resize(N), b.resize(N)
    out = np.zeros((a.m, 2 * N + 1), dtype=complex)
    out[:, N] = -(b.mean - a.mean) / np.log(t)
    if N:
        n, q, den = _q(t, N)
        A, B = _pos(a), _pos(b)
        out[:, N + 1:] = 2 * n * (q * q * A - q * B) / den
        # negative branch: with k = -n > 0, t^{2n} = q_k^2 and t^{2n} - 1 = -(1 - q_k^2)
        An = a.coeffs[:, :N][:, ::-1]      # a_{-1}, a_{-2}, ...
        Bn = b.coeffs[:, :N][:, ::-1]
        neg = 2 * (-n) * (q * q * An - q * Bn) / (-den)
        out[:, :N] = neg[:, ::-1]
    return CircleMap(out)


def remainder_from_extension(a: CircleMap, b: CircleMap, t: float) -> CircleMap:
    """R_t[a, b] recomputed from the radial derivative of the extension at r = 1.

    Independent of the closed form in :func:`remainder_R`; the two agree to
    rounding, which settles the sign conventions of the negative branch.
    """
    d = AnnulusBoundaryData(a, b, t)
    ec = extension_coeffs(d)
    N = d.N
    out = np.zeros((d.m, 2 * N + 1), dtype=complex)
    out[:, N] = -ec.c_tilde
    for n in range(-N, N + 1):
        if n == 0:
            continue
        cn, cpn = ec.mode(n)
        # outward normal at r = 1 is -d/dr
        out[:, N + n] = -n * (cn - cpn) - abs(n) * d.a.mode(n)
    return CircleMap(out)


def remainder_tail_bound(t: float, N: int) -> float:
    """sum_{n > N} 2n t^-n / (1 - t^-2n): per-unit-coefficient weight of the dropped tail."""
    t = _check_t(t)
    L = np.log(t)
    n = np.arange(N + 1, N + 2000)
    w = 2 * n * np.exp(-n * L) / -np.expm1(-2 * n * L)
    return float(np.sum(w))


def dtn_inner(d: AnnulusBoundaryData) -> CircleMap:
    """Outward normal derivative on |z| = 1."""
    return frac_laplacian(d.a, 0.5) + remainder_R(d.a, d.b, d.t)


def dtn_outer(d: AnnulusBoundaryData) -> CircleMap:
    """Outward normal derivative on |z| = t."""
    return (1.0 / d.t) * (frac_laplacian(d.b, 0.5) + remainder_R(d.b, d.a, d.t))


# ----------------------------------------------------------------------
# Teichmueller derivative and Hopf function
# ----------------------------------------------------------------------

def _energy_derivative_analytic(d: AnnulusBoundaryData) -> float:
    t = _check_t(d.t)
    L = np.log(t)
    jump = d.b.mean - d.a.mean
    val = -float(np.dot(jump, jump)) / (t * L * L)
    if d.N:
        n, q, den = _q(t, d.N)
        A, B = _pos(d.a), _pos(d.b)
        sq = np.sum(np.abs(A) ** 2 + np.abs(B) ** 2, axis=0)
        cross = _dot(A, B).real
        # d/dt 1/(t^{2n}-1)      = -2n q^2 / (t (1-q^2)^2)
        # d/dt t^n/(t^{2n}-1)    = -n q (1+q^2) / (t (1-q^2)^2)
        d_diag = -2 * n * q * q / (t * den ** 2)
        d_cross = -n * q * (1 + q * q) / (t * den ** 2)
        val += float(np.sum(n * (4 * sq * d_diag - 8 * cross * d_cross)))
    return 2 * np.pi * val


def energy_second_derivative_t(d: AnnulusBoundaryData) -> float:
    """d^2/dt^2 E_t(u[t]) with the traces held fixed (termwise, closed form)."""
    t = _check_t(d.t)
    L = np.log(t)
    jump = d.b.mean - d.a.mean
    val = float(np.dot(jump, jump)) * (L + 2) / (t * t * L ** 3)
    if d.N:
        n, q, den = _q(t, d.N)
        A, B = _pos(d.a), _pos(d.b)
        sq = np.sum(np.abs(A) ** 2 + np.abs(B) ** 2, axis=0)
        cross = _dot(A, B).real
        # second t-derivatives of 1/(t^{2n}-1) and t^n/(t^{2n}-1), written in q = t^-n
        dd_diag = 2 * n * q * q / (t * t * den ** 2) * (2 * n + 1 + 4 * n * q * q / den)
        dd_cross = n / (t * t) * (q * (1 + q * q) / den ** 2 + n * q * (1 + 6 * q * q + q ** 4) / den ** 3)
        val += float(np.sum(n * (4 * sq * dd_diag - 8 * cross * dd_cross)))
    return 2 * np.pi * val


def _energy_derivative_boundary(d: AnnulusBoundaryData, K: int | None = None) -> float:
    ec = extension_coeffs(d)
    K = K or 4 * d.N + 8
    th = theta_grid(K)
    dr, dth = extension_gradient(ec, d.t, th)
    integrand = np.sum(dth ** 2, axis=1) - np.sum(dr ** 2, axis=1)
    return float(d.t * np.sum(integrand) * 2 * np.pi / K)


def energy_derivative_t(d: AnnulusBoundaryData, path: str = "analytic") -> float:
    """d/dt E_t(u[t]) with the traces held fixed.

    ``path="analytic"`` differentiates the closed-form energy termwise;
    ``path="boundary"`` integrates t^-2 |d_theta u|^2 - |d_r u|^2 over |z| = t;
    ``path="hopf"`` uses -8 pi c / t with c the constant Hopf coefficient.
    """
    if path == "analytic":
        return _energy_derivative_analytic(d)
    if path == "boundary":
        return _energy_derivative_boundary(d)
    if path == "hopf":
        return -8 * np.pi * conformality_defect(d) / d.t
    raise ValueError(f"unknown path {path!r}")


def hopf_laurent(ec: ExtensionCoeffs) -> HopfLaurent:
    """Laurent coefficients of z^2 H(z), powers -2N..2N.

    z du/dz = c~/2 + sum_{n != 0} n c_n z^n with c_{-n} = conj(c'_n).
    """
    N = ec.N
    n = np.arange(1, N + 1)
    g = np.zeros((ec.a0.size, 2 * N + 1), dtype=complex)
    g[:, N] = ec.c_tilde / 2
    if N:
        g[:, N + 1:] = n * ec.c
        g[:, :N] = (-n * np.conj(ec.c_prime))[:, ::-1]
    return laurent_square(g, -N)


def conformality_defect(d: AnnulusBoundaryData) -> float:
    """The real constant c = Re(coefficient of z^0 in z^2 H)."""
    return hopf_laurent(extension_coeffs(d)).c


def hopf_boundary_integrand(d: AnnulusBoundaryData, r: float, K: int | None = None) -> np.ndarray:
    """|d_theta u|^2 - r^2 |d_r u|^2 on the circle |z| = r (equals -4c for critical maps)."""
    ec = extension_coeffs(d)
    K = K or 4 * d.N + 8
    dr, dth = extension_gradient(ec, r, theta_grid(K))
    return r * r * (np.sum(dth ** 2, axis=1) - np.sum(dr ** 2, axis=1))


# ----------------------------------------------------------------------
# export
# ----------------------------------------------------------------------

def export_obj(d: AnnulusBoundaryData, path, n_r: int = 32, n_theta: int = 64) -> None:
    """Write the extension surface (m = 3) as a Wavefront OBJ triangle mesh."""
    if d.m != 3:
        raise ValueError("OBJ export needs a map into R^3")
    ec = extension_coeffs(d)
    r = np.exp(np.linspace(0.0, np.log(d.t), n_r))
    th = theta_grid(n_theta)
    X = extension_eval(ec, r[:, None], th[None, :])
    lines = [f"v {x:.17g} {y:.17g} {z:.17g}" for x, y, z in X.reshape(-1, 3)]
    for i in range(n_r - 1):
        for j in range(n_theta):
            p = i * n_theta + j + 1
            q = i * n_theta + (j + 1) % n_theta + 1
            lines.append(f"f {p} {q} {q + n_theta}")
            lines.append(f"f {p} {q + n_theta} {p + n_theta}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
