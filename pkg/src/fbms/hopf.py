"""Laurent coefficients of z^2 H(z) for harmonic maps on disks and annuli.

For a harmonic ``u`` whose holomorphic derivative satisfies

    z du/dz = G(z) = sum_k g_k z^k,

the Hopf function obeys ``z^2 H(z) = G(z) . G(z)`` (bilinear, no conjugation).
:func:`laurent_square` forms the product by exact coefficient convolution;
:func:`sampled_laurent_square` recovers the same numbers from samples on a
circle |z| = rho and is kept as an independent cross-check (it loses
accuracy like rho^{-|k|} for high powers).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.signal import convolve


@dataclass
class HopfLaurent:
    powers: np.ndarray          # exponents k of z^k
    coeffs: np.ndarray          # complex coefficient of z^k in z^2 H(z)
    c: float                    # real part of the constant coefficient
    imag_constant: float
    residual: float             # l2 norm of all non-constant coefficients
    extra: dict = field(default_factory=dict)

    def coefficient(self, k: int) -> complex:
        idx = np.nonzero(self.powers == k)[0]
        return complex(self.coeffs[idx[0]]) if idx.size else 0j

    @property
    def defect(self) -> float:
        """Distance of z^2 H from the zero function, in coefficient l2."""
        return float(np.sqrt(np.sum(np.abs(self.coeffs) ** 2)))


def _pack(powers, coeffs) -> HopfLaurent:
    zero = powers == 0
    c0 = coeffs[zero][0] if np.any(zero) else 0j
    res = float(np.sqrt(np.sum(np.abs(coeffs[~zero]) ** 2)))
    return HopfLaurent(powers=powers, coeffs=coeffs, c=float(c0.real),
                       imag_constant=float(c0.imag), residual=res)


def laurent_square(g: np.ndarray, kmin: int) -> HopfLaurent:
    """Square of G with coefficient vectors ``g`` (m, L) for powers kmin..kmin+L-1."""
    g = np.atleast_2d(np.asarray(g, dtype=complex))
    L = g.shape[1]
    coeffs = sum(convolve(row, row, method="direct") for row in g)
    powers = np.arange(2 * kmin, 2 * kmin + 2 * L - 1)
    return _pack(powers, np.asarray(coeffs))


def sampled_laurent_square(g_samples_fn, rho: float, kmin: int, kmax: int) -> HopfLaurent:
    """Sample G on |z| = rho, square it and read off Laurent coefficients kmin..kmax.

    ``g_samples_fn(theta)`` must return G(rho e^{i theta}) with shape (K, m).
    """
    span = kmax - kmin
    K = 2 * span + 2
    theta = 2 * np.pi * np.arange(K) / K
    G = g_samples_fn(theta)
    zH = np.sum(G * G, axis=1)
    spec = np.fft.fft(zH) / K
    powers = np.arange(kmin, kmax + 1)
    coeffs = spec[powers % K] / rho ** powers.astype(float)
    out = _pack(powers, coeffs)
    out.extra["rho"] = rho
    return out
