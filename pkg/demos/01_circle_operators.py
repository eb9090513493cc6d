"""Fourier operators on the circle and the half-Dirichlet energy.

Run: python demos/01_circle_operators.py
"""
# %% A band-limited map into the plane, stored by its Fourier coefficients
import numpy as np

from fbms.circle import CircleMap, frac_laplacian, half_seminorm_sq, riesz_transform, theta_grid
from fbms.disk import disk_energy, disk_hopf_defect
from fbms.fraccalc import seminorm_identity_check

u = CircleMap.from_function(lambda th: np.stack([np.cos(th), np.sin(2 * th)], 1), 4)
th = theta_grid(8)
print("samples of u:\n", np.round(u(th), 3))

# %% (-Delta)^(1/2) multiplies mode n by |n|; the Riesz transform by -i sgn n
half = frac_laplacian(u, 0.5)
print("(-Delta)^1/2 of (cos, sin 2th) at th=0:", np.round(half(np.array([0.0])), 12))
print("Riesz of cos is sin:", np.allclose(riesz_transform(u)(th)[:, 0], np.sin(th)))

# %% The disk extension energy is half the H^1/2 seminorm; cos + sin 2th gives pi + 2 pi
print("disk energy:", disk_energy(u), " expected 3 pi =", 3 * np.pi)
print("seminorm:", half_seminorm_sq(u))

# %% The double integral of |u(a)-u(b)|^2/|e^ia - e^ib|^2 is 2 pi times that energy
d = seminorm_identity_check(u, K=512)
print("double integral vs Fourier side:", d.extra, "relative residual", d.residual)

# %% (cos, sin 2th) is not conformal: its Hopf differential does not vanish
_, defect = disk_hopf_defect(u)
print("Hopf defect:", defect)
