"""Unit-disk model: energy, harmonic extension, DtN map and Hopf function."""

from __future__ import annotations

import numpy as np

from .circle import CircleMap, frac_laplacian, half_seminorm_sq
from .hopf import HopfLaurent, laurent_square


def disk_energy(a: CircleMap) -> float:
    """Dirichlet energy of the harmonic extension, 2 pi sum |n| |a_n|^2."""
    return half_seminorm_sq(a)


def _check_radius(r):
    r = np.asarray(r, dtype=float)
    if np.any(r < 0) or np.any(r > 1 + 1e-14):
        raise ValueError("disk extension is only defined for 0 <= r <= 1")
    return r


def disk_extension_eval(a: CircleMap, r, theta) -> np.ndarray:
    """Evaluate sum a_n r^|n| e^{i n theta}; r and theta broadcast, output (..., m)."""
    r = _check_radius(r)
    r, theta = np.broadcast_arrays(r, np.asarray(theta, dtype=float))
    n = a.modes
    basis = r[..., None] ** np.abs(n) * np.exp(1j * theta[..., None] * n)
    return (basis @ a.coeffs.T).real


def disk_extension_gradient(a: CircleMap, r, theta) -> tuple[np.ndarray, np.ndarray]:
    """(d/dr, (1/r) d/dtheta) of the extension."""
    r = _check_radius(r)
    r, theta = np.broadcast_arrays(r, np.asarray(theta, dtype=float))
    n = a.modes
    absn = np.abs(n)
    e = np.exp(1j * theta[..., None] * n)
    # r^{|n|-1}, with the n = 0 column never contributing
    rp = np.where(absn > 0, r[..., None] ** np.maximum(absn - 1, 0), 0.0)
    dr = ((absn * rp * e) @ a.coeffs.T).real
    dth = ((1j * n * rp * e) @ a.coeffs.T).real
    return dr, dth


def disk_dtn(a: CircleMap) -> CircleMap:
    """Outward normal derivative of the extension: (-Delta)^{1/2} a."""
    return frac_laplacian(a, 0.5)


def disk_hopf(a: CircleMap) -> HopfLaurent:
    """Taylor coefficients of z^2 H(z), powers 0..2N.

    z du/dz = sum_{n>0} n a_n z^n, so only powers 2..2N can be nonzero.
    """
    N = a.N
    g = np.zeros((a.m, N + 1), dtype=complex)
    g[:, 1:] = a.coeffs[:, N + 1:] * np.arange(1, N + 1)
    return laurent_square(g, 0)


def disk_hopf_defect(a: CircleMap) -> tuple[HopfLaurent, float]:
    """Laurent data of z^2 H and its scalar deviation from zero."""
    h = disk_hopf(a)
    return h, h.defect
