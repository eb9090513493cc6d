"""
Truncated Fourier representation of maps S^1 -> R^m.

A :class:`CircleMap` stores, for every component ``i`` and every mode
``n = -N..N``, the complex coefficient ``c_n^(i)`` of

    u_i(theta) = sum_n c_n^(i) exp(i n theta).

Coefficients use the normalisation a_n = (1/2pi) int u exp(-i n theta),
so the DFT of K >= 2N+1 equispaced samples recovers them exactly for
band-limited data.

All circle operators are Fourier multipliers:

    (-Delta)^s   :  |n|^{2s}      (zero mode -> 0)
    Riesz        :  -i sgn(n)     (zero mode -> 0)
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Callable

import numpy as np


class AliasingError(ValueError):
    """Raised when a sample grid is too coarse for the truncation order."""


class ManifoldDomainError(ValueError):
    """Raised when a pointwise map is evaluated outside its domain."""


def _hermitian_defect(coeffs: np.ndarray) -> float:
    return float(np.max(np.abs(coeffs - np.conj(coeffs[:, ::-1])), initial=0.0))


@dataclass(frozen=True, eq=False)
class CircleMap:
    """Real-vector-valued trigonometric polynomial on the circle.

    Parameters
    ----------
    coeffs : array_like, shape (m, 2N+1)
        Complex coefficients, column ``n + N`` holding mode ``n``.
    """

    coeffs: np.ndarray

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=complex)
        if c.ndim == 1:
            c = c[None, :]
        if c.ndim != 2 or c.shape[1] % 2 != 1:
            raise ValueError(f"coeffs must have shape (m, 2N+1), got {c.shape}")
        scale = max(1.0, float(np.max(np.abs(c), initial=0.0)))
        if _hermitian_defect(c) > 1e-10 * scale:
            raise ValueError("coefficients violate Hermitian symmetry c_{-n} = conj(c_n)")
        # enforce the symmetry exactly so sampled values are real
        c = 0.5 * (c + np.conj(c[:, ::-1]))
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    # ------------------------------------------------------------------
    @property
    def m(self) -> int:
        return self.coeffs.shape[0]

    @property
    def N(self) -> int:
        return (self.coeffs.shape[1] - 1) // 2

    @property
    def modes(self) -> np.ndarray:
        return np.arange(-self.N, self.N + 1)

    def mode(self, n: int) -> np.ndarray:
        """Coefficient vector of mode ``n`` (zeros beyond the truncation)."""
        if abs(n) > self.N:
            return np.zeros(self.m, dtype=complex)
        return self.coeffs[:, n + self.N].copy()

    @property
    def mean(self) -> np.ndarray:
        return self.coeffs[:, self.N].real.copy()

    # ------------------------------------------------------------------
    @classmethod
    def zeros(cls, m: int, N: int) -> "CircleMap":
        return cls(np.zeros((m, 2 * N + 1), dtype=complex))

    @classmethod
    def constant(cls, p, N: int = 0) -> "CircleMap":
        p = np.atleast_1d(np.asarray(p, dtype=float))
        c = np.zeros((p.size, 2 * N + 1), dtype=complex)
        c[:, N] = p
        return cls(c)

    @classmethod
    def from_modes(cls, modes: dict, m: int, N: int) -> "CircleMap":
        """Build from ``{n: vector}`` for n >= 0; negative modes are implied."""
        c = np.zeros((m, 2 * N + 1), dtype=complex)
        for n, v in modes.items():
            v = np.broadcast_to(np.asarray(v, dtype=complex), (m,))
            if n == 0:
                c[:, N] = v.real
            else:
                c[:, N + n] = v
                c[:, N - n] = np.conj(v)
        return cls(c)

    @classmethod
    def from_function(cls, func: Callable, N: int, oversample: int = 4) -> "CircleMap":
        """Project ``func(theta) -> (K, m)`` onto order ``N`` by collocation."""
        K = oversample * (2 * N + 1)
        theta = 2 * np.pi * np.arange(K) / K
        return from_samples(np.asarray(func(theta), dtype=float), N)

    @classmethod
    def random(cls, m: int, N: int, rng: np.random.Generator, decay: float = 0.0) -> "CircleMap":
        """Random band-limited map with coefficients ~ (1+|n|)^-decay."""
        c = np.zeros((m, 2 * N + 1), dtype=complex)
        n = np.arange(1, N + 1)
        w = (1.0 + n) ** (-decay)
        pos = (rng.standard_normal((m, N)) + 1j * rng.standard_normal((m, N))) * w / np.sqrt(2)
        c[:, N] = rng.standard_normal(m)
        c[:, N + 1:] = pos
        c[:, :N] = np.conj(pos[:, ::-1])
        return cls(c)

    # ------------------------------------------------------------------
    def resize(self, N: int) -> "CircleMap":
        """Zero-pad or truncate to order ``N``."""
        c = np.zeros((self.m, 2 * N + 1), dtype=complex)
        k = min(N, self.N)
        c[:, N - k:N + k + 1] = self.coeffs[:, self.N - k:self.N + k + 1]
        return CircleMap(c)

    def multiplier(self, symbol: np.ndarray) -> "CircleMap":
        """Apply the Fourier multiplier ``symbol[n + N]``."""
        return CircleMap(self.coeffs * np.asarray(symbol)[None, :])

    def __call__(self, theta) -> np.ndarray:
        """Evaluate at arbitrary angles; returns shape (len(theta), m)."""
        theta = np.atleast_1d(np.asarray(theta, dtype=float))
        E = np.exp(1j * np.outer(theta, self.modes))
        return (E @ self.coeffs.T).real

    def __add__(self, other: "CircleMap") -> "CircleMap":
        N = max(self.N, other.N)
        return CircleMap(self.resize(N).coeffs + other.resize(N).coeffs)

    def __sub__(self, other: "CircleMap") -> "CircleMap":
        N = max(self.N, other.N)
        return CircleMap(self.resize(N).coeffs - other.resize(N).coeffs)

    def __neg__(self) -> "CircleMap":
        return CircleMap(-self.coeffs)

    def __mul__(self, s: float) -> "CircleMap":
        return CircleMap(self.coeffs * float(s))

    __rmul__ = __mul__

    def component(self, i: int) -> "CircleMap":
        return CircleMap(self.coeffs[i:i + 1])

    def linear(self, A: np.ndarray) -> "CircleMap":
        """Apply a constant k x m matrix coefficientwise."""
        return CircleMap(np.asarray(A, dtype=float) @ self.coeffs)

    def rotate_domain(self, alpha: float) -> "CircleMap":
        """Return theta -> u(theta + alpha)."""
        return CircleMap(self.coeffs * np.exp(1j * self.modes * alpha)[None, :])

    def derivative(self) -> "CircleMap":
        return CircleMap(self.coeffs * (1j * self.modes)[None, :])

    def allclose(self, other: "CircleMap", atol: float = 1e-12) -> bool:
        N = max(self.N, other.N)
        return bool(np.max(np.abs(self.resize(N).coeffs - other.resize(N).coeffs), initial=0.0) <= atol)

    # ------------------------------------------------------------------
    def to_json(self) -> dict:
        return {
            "m": self.m,
            "N": self.N,
            "coeffs": [[[float(z.real), float(z.imag)] for z in row] for row in self.coeffs],
        }

    @classmethod
    def from_json(cls, obj) -> "CircleMap":
        if isinstance(obj, str):
            obj = json.loads(obj)
        m, N = int(obj["m"]), int(obj["N"])
        arr = np.asarray(obj["coeffs"], dtype=float)
        if arr.shape != (m, 2 * N + 1, 2):
            raise ValueError(f"coeffs shape {arr.shape} inconsistent with m={m}, N={N}")
        return cls(arr[..., 0] + 1j * arr[..., 1])


# ----------------------------------------------------------------------
# sampling
# ----------------------------------------------------------------------

def theta_grid(K: int) -> np.ndarray:
    return 2 * np.pi * np.arange(K) / K


def to_samples(u: CircleMap, K: int) -> np.ndarray:
    """Exact values of ``u`` at theta_k = 2 pi k / K, shape (K, m)."""
    if K < 2 * u.N + 1:
        raise AliasingError(f"K={K} samples cannot represent order N={u.N} (need K >= {2 * u.N + 1})")
    spec = np.zeros((u.m, K), dtype=complex)
    spec[:, u.modes % K] = u.coeffs
    return (np.fft.ifft(spec, axis=1) * K).real.T


def from_samples(grid, N: int) -> CircleMap:
    """Discrete Fourier coefficients of equispaced samples, truncated to order N."""
    g = np.asarray(grid, dtype=float)
    if g.ndim == 1:
        g = g[:, None]
    K = g.shape[0]
    if K < 2 * N + 1:
        raise AliasingError(f"{K} samples cannot determine order N={N}")
    spec = np.fft.fft(g, axis=0).T / K
    n = np.arange(-N, N + 1)
    return CircleMap(spec[:, n % K])


def pointwise_compose(u: CircleMap, phi: Callable, oversample: int = 4,
                      N: int | None = None) -> CircleMap:
    """Sample ``u`` on an oversampled grid, apply ``phi`` row-wise, re-project.

    ``phi`` receives the (K, m) sample array and returns (K, k) or (K,).
    Domain failures inside ``phi`` should raise :class:`ManifoldDomainError`.
    """
    if oversample < 2:
        raise ValueError("oversample factor must be >= 2")
    N = u.N if N is None else N
    K = oversample * (2 * max(N, u.N) + 1)
    vals = np.asarray(phi(to_samples(u, K)), dtype=float)
    if vals.ndim == 1:
        vals = vals[:, None]
    return from_samples(vals, N)


def multiply(u: CircleMap, v: CircleMap) -> CircleMap:
    """Exact product of two trigonometric polynomials (order N_u + N_v).

    If both are vector valued with equal m the product is the dot product;
    if one is scalar it scales the other.
    """
    N = u.N + v.N
    K = 2 * N + 1
    a, b = to_samples(u, K), to_samples(v, K)
    if u.m == v.m:
        prod = a * b if u.m == 1 else np.sum(a * b, axis=1, keepdims=True)
    elif u.m == 1 or v.m == 1:
        prod = a * b
    else:
        raise ValueError(f"cannot multiply maps with m={u.m} and m={v.m}")
    return from_samples(prod, N)


# ----------------------------------------------------------------------
# multipliers and norms
# ----------------------------------------------------------------------

def frac_laplacian(u: CircleMap, s: float) -> CircleMap:
    """(-Delta)^s with symbol |n|^{2s}; the mean is always annihilated."""
    n = np.abs(u.modes).astype(float)
    sym = np.zeros_like(n)
    nz = n > 0
    sym[nz] = n[nz] ** (2.0 * s)
    if s == 0:
        sym[~nz] = 1.0
    return u.multiplier(sym)


def riesz_transform(u: CircleMap) -> CircleMap:
    """Circle Hilbert transform, symbol -i sgn(n)."""
    return u.multiplier(-1j * np.sign(u.modes))


def l2_inner(u: CircleMap, v: CircleMap) -> float:
    """int_0^{2pi} u . v dtheta."""
    N = max(u.N, v.N)
    a, b = u.resize(N).coeffs, v.resize(N).coeffs
    return float(2 * np.pi * np.sum(a * np.conj(b)).real)


def l2_norm(u: CircleMap) -> float:
    return float(np.sqrt(max(l2_inner(u, u), 0.0)))


def h_s_norm_sq(u: CircleMap, s: float) -> float:
    w = (1.0 + u.modes.astype(float) ** 2) ** s
    return float(np.sum(w[None, :] * np.abs(u.coeffs) ** 2))


def half_seminorm_sq(u: CircleMap) -> float:
    """2 pi sum |n| |c_n|^2 = ||(-Delta)^{1/4} u||_{L^2}^2."""
    return float(2 * np.pi * np.sum(np.abs(u.modes)[None, :] * np.abs(u.coeffs) ** 2))


def gagliardo_double_integral(u: CircleMap, K: int = 512) -> float:
    """Trapezoid evaluation of  iint |u(a)-u(b)|^2 / |e^{ia}-e^{ib}|^2  da db.

    The integrand is smooth and periodic once the diagonal is filled with its
    limit |u'(a)|^2, so the rule converges spectrally.
    """
    th = theta_grid(K)
    vals = to_samples(u, K) if K >= 2 * u.N + 1 else u(th)
    dvals = u.derivative()(th)
    diff = vals[:, None, :] - vals[None, :, :]
    num = np.sum(diff ** 2, axis=2)
    den = np.abs(np.exp(1j * th)[:, None] - np.exp(1j * th)[None, :]) ** 2
    np.fill_diagonal(den, 1.0)
    ratio = num / den
    np.fill_diagonal(ratio, np.sum(dvals ** 2, axis=1))
    h = 2 * np.pi / K
    return float(np.sum(ratio) * h * h)
