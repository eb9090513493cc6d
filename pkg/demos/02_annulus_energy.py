"""Energy, Dirichlet-to-Neumann maps and the conformal parameter on an annulus.

Run: python demos/02_annulus_energy.py
"""
# %% Random boundary data on the two circles of A_t = {1 < |z| < t}
import numpy as np

from fbms.annulus import (AnnulusBoundaryData, annulus_energy, conformality_defect, dtn_inner,
                          energy_derivative_t)
from fbms.circle import CircleMap
from fbms.runner.oracles import fd_laplace_oracle

rng = np.random.default_rng(0)
d = AnnulusBoundaryData(CircleMap.random(2, 6, rng, decay=1.0), CircleMap.random(2, 6, rng, decay=1.0), 2.0)

# %% Closed-form energy against a finite-difference Laplace solve on a polar grid
sol = fd_laplace_oracle("annulus", (d.a, d.b), grid=(512, 256), t=d.t)
E = annulus_energy(d)
print(f"series energy {E:.10f}   finite differences {sol.energy:.10f}")
print("max |DtN_inner - FD normal derivative|:",
      np.max(np.abs(dtn_inner(d)(sol.theta) - sol.dnu_inner)))

# %% Constants 0 and 1 give the log profile with energy 2 pi / log t
c = AnnulusBoundaryData(CircleMap.constant([0.0], 1), CircleMap.constant([1.0], 1), np.e)
print("constants at t=e:", annulus_energy(c), "=", 2 * np.pi)

# %% dE/dt three ways, and its link to the Hopf constant c: dE/dt = -8 pi c / t
for path in ("analytic", "boundary", "hopf"):
    print(f"dE/dt ({path:8s}) = {energy_derivative_t(d, path):+.12f}")
h = 1e-5
print("central difference    =", (annulus_energy(d.with_t(2 + h)) - annulus_energy(d.with_t(2 - h))) / (2 * h))
print("Hopf constant c       =", conformality_defect(d))
