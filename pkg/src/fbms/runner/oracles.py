"""
Independent verification oracles.

Nothing here imports the solver modules: boundary data enter as equispaced
samples and the catenoid constants come from a scalar bisection.  These
routines are used for cross-checks only.

The Laplace oracle discretises the radial direction with second-order
finite differences and diagonalises the periodic angular direction with
the FFT, one radial two-point boundary value problem per angular mode.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_banded


@dataclass
class FDSolution:
    radii: np.ndarray          # radial nodes
    theta: np.ndarray          # angular nodes
    values: np.ndarray         # (n_r, n_theta, m)
    dnu_inner: np.ndarray      # outward normal derivative on the inner circle (or None)
    dnu_outer: np.ndarray      # outward normal derivative on r = r_max
    energy: float              # discrete Dirichlet energy


def _angular_symbol(n: np.ndarray, n_theta: int, scheme: str) -> np.ndarray:
    if scheme == "spectral":
        return n.astype(float) ** 2
    if scheme == "fd":
        h = 2 * np.pi / n_theta
        return (2 - 2 * np.cos(n * h)) / h ** 2
    raise ValueError(f"unknown angular scheme {scheme!r}")


def _as_samples(x, n_theta):
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if x.shape[0] != n_theta:
        raise ValueError(f"expected {n_theta} boundary samples, got {x.shape[0]}")
    return x


def _one_sided(u0, u1, u2, h):
    """Second-order derivative at node 0 pointing into the grid."""
    return (-3 * u0 + 4 * u1 - u2) / (2 * h)


def fd_laplace_annulus(inner, outer, t: float, n_r: int = 256, angular: str = "spectral") -> FDSolution:
    """Harmonic function on 1 <= r <= t with sampled traces on both circles.

    Works in rho = log r, where the Laplacian becomes u_rr + u_tt (conformal
    change), on a uniform rho grid with n_r nodes.
    """
    if t <= 1:
        raise ValueError("annulus needs t > 1")
    inner = np.asarray(inner, dtype=float)
    n_theta = inner.shape[0]
    inner, outer = _as_samples(inner, n_theta), _as_samples(outer, n_theta)
    m = inner.shape[1]
    L = np.log(t)
    rho = np.linspace(0.0, L, n_r)
    h = rho[1] - rho[0]
    n = np.fft.fftfreq(n_theta, d=1.0 / n_theta).round().astype(int)
    lam = _angular_symbol(n, n_theta, angular)
    A_hat = np.fft.fft(inner, axis=0)
    B_hat = np.fft.fft(outer, axis=0)
    U_hat = np.zeros((n_r, n_theta, m), dtype=complex)
    U_hat[0], U_hat[-1] = A_hat, B_hat
    n_int = n_r - 2
    energy = 0.0
    for k in range(n_theta):
        # (u_{i+1} - 2u_i + u_{i-1})/h^2 - lam u_i = 0
        ab = np.zeros((3, n_int))
        ab[0, 1:] = 1.0
        ab[1, :] = -2.0 - lam[k] * h * h
        ab[2, :-1] = 1.0
        rhs = np.zeros((n_int, m), dtype=complex)
        rhs[0] -= A_hat[k]
        rhs[-1] -= B_hat[k]
        U_hat[1:-1, k] = solve_banded((1, 1), ab, rhs)
    U = np.fft.ifft(U_hat, axis=1).real
    # discrete Dirichlet form, int (u_rho^2 + u_theta^2) drho dtheta, via Parseval in theta
    diff = np.diff(U_hat, axis=0)
    wts = np.full(n_r, h)
    wts[[0, -1]] = h / 2
    energy = (2 * np.pi / n_theta ** 2) * (
        np.sum(np.abs(diff) ** 2) / h
        + np.sum(lam[None, :, None] * wts[:, None, None] * np.abs(U_hat) ** 2))
    # d/dr = (1/r) d/drho; outward is -d/dr at r = 1 and +d/dr at r = t
    dn_in = _one_sided(U[0], U[1], U[2], h)           # = +du/drho at rho = 0
    dn_out = _one_sided(U[-1], U[-2], U[-3], h)        # = -du/drho at rho = L
    return FDSolution(radii=np.exp(rho), theta=2 * np.pi * np.arange(n_theta) / n_theta, values=U,
                      dnu_inner=-dn_in, dnu_outer=-dn_out / t, energy=float(energy))


def fd_laplace_disk(boundary, n_r: int = 256, angular: str = "spectral") -> FDSolution:
    """Harmonic function on the unit disk with sampled trace on r = 1.

    Radial nodes r_i = i h, i = 0..n_r-1 with h = 1/(n_r-1); the flux form
    (1/r)(r u_r)_r keeps the scheme second order up to the origin.
    """
    bnd = np.asarray(boundary, dtype=float)
    n_theta = bnd.shape[0]
    bnd = _as_samples(bnd, n_theta)
    m = bnd.shape[1]
    r = np.linspace(0.0, 1.0, n_r)
    h = r[1]
    n = np.fft.fftfreq(n_theta, d=1.0 / n_theta).round().astype(int)
    lam = _angular_symbol(n, n_theta, angular)
    B_hat = np.fft.fft(bnd, axis=0)
    U_hat = np.zeros((n_r, n_theta, m), dtype=complex)
    U_hat[-1] = B_hat
    ri = r[1:-1]
    rp, rm = ri + h / 2, ri - h / 2
    for k in range(n_theta):
        if n[k] == 0:
            # unknowns u_0..u_{n_r-2}; origin row from the symmetric stencil 4(u_1 - u_0)/h^2 = 0
            size = n_r - 1
            ab = np.zeros((3, size))
            ab[1, 0], ab[0, 1] = -4.0, 4.0
            ab[2, :-1] = rm / ri
            ab[1, 1:] = -(rp + rm) / ri
            ab[0, 2:] = (rp / ri)[:-1]
            rhs = np.zeros((size, m), dtype=complex)
            rhs[-1] -= (rp[-1] / ri[-1]) * B_hat[k]
            U_hat[:-1, k] = solve_banded((1, 1), ab, rhs)
        else:
            size = n_r - 2
            ab = np.zeros((3, size))
            ab[0, 1:] = (rp / ri)[:-1]
            ab[1, :] = -(rp + rm) / ri - lam[k] * h * h / ri ** 2
            ab[2, :-1] = (rm / ri)[1:]
            rhs = np.zeros((size, m), dtype=complex)
            rhs[-1] -= (rp[-1] / ri[-1]) * B_hat[k]
            U_hat[1:-1, k] = solve_banded((1, 1), ab, rhs)
    U = np.fft.ifft(U_hat, axis=1).real
    # int (u_r^2 + u_t^2 / r^2) r dr dtheta with midpoint radii for the angular part
    diff = np.diff(U_hat, axis=0)
    rmid = 0.5 * (r[1:] + r[:-1])
    mid = 0.5 * (U_hat[1:] + U_hat[:-1])
    energy = (2 * np.pi / n_theta ** 2) * (
        np.sum(rmid[:, None, None] * np.abs(diff) ** 2) / h
        + np.sum((h / rmid)[:, None, None] * lam[None, :, None] * np.abs(mid) ** 2))
    dn_out = -_one_sided(U[-1], U[-2], U[-3], h)
    return FDSolution(radii=r, theta=2 * np.pi * np.arange(n_theta) / n_theta, values=U,
                      dnu_inner=None, dnu_outer=dn_out, energy=float(energy))


def fd_laplace_oracle(geometry: str, boundary, grid=(256, 256), t: float | None = None,
                      angular: str = "spectral") -> FDSolution:
    """Dispatch to the disk or annulus solver.

    ``boundary`` is a callable theta -> (K, m) samples, or a pair of them for
    the annulus; ``grid`` is (n_r, n_theta).
    """
    n_r, n_theta = grid
    th = 2 * np.pi * np.arange(n_theta) / n_theta
    if geometry == "disk":
        return fd_laplace_disk(boundary(th), n_r=n_r, angular=angular)
    if geometry == "annulus":
        inner, outer = boundary
        return fd_laplace_annulus(inner(th), outer(th), t, n_r=n_r, angular=angular)
    raise ValueError(f"unknown geometry {geometry!r}")


# ----------------------------------------------------------------------
# catenoid
# ----------------------------------------------------------------------

def catenoid_s0(tol: float = 1e-12) -> float:
    """Root of s tanh s = 1 by bisection on [0.5, 2]."""
    lo, hi = 0.5, 2.0
    f = lambda s: s * np.tanh(s) - 1.0
    while hi - lo > tol * 1e-3:
        mid = 0.5 * (lo + hi)
        if f(mid) > 0:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


@dataclass
class CatenoidOracle:
    s0: float
    scale: float
    t_star: float

    def inner(self, theta):
        theta = np.asarray(theta, dtype=float)
        R = self.scale * np.cosh(self.s0)
        return np.stack([R * np.cos(theta), R * np.sin(theta), np.full_like(theta, -self.scale * self.s0)], axis=1)

    def outer(self, theta):
        theta = np.asarray(theta, dtype=float)
        R = self.scale * np.cosh(self.s0)
        return np.stack([R * np.cos(theta), R * np.sin(theta), np.full_like(theta, self.scale * self.s0)], axis=1)

    def surface(self, r, theta):
        """Catenoid in annulus coordinates, s = log r - s0."""
        s = np.log(r) - self.s0
        c = self.scale
        return np.stack([c * np.cosh(s) * np.cos(theta), c * np.cosh(s) * np.sin(theta), c * s], axis=-1)


def catenoid_oracle() -> CatenoidOracle:
    s0 = catenoid_s0()
    scale = 1.0 / np.sqrt(np.cosh(s0) ** 2 + s0 ** 2)
    return CatenoidOracle(s0=s0, scale=scale, t_star=float(np.exp(2 * s0)))
