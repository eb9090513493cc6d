"""The critical catenoid as a free boundary minimal annulus in the unit ball.

Run: python demos/03_catenoid.py
"""
# %% The catenoid meets the sphere orthogonally when s0 tanh s0 = 1
import numpy as np

from fbms.annulus import AnnulusBoundaryData
from fbms.circle import CircleMap
from fbms.manifolds import Sphere
from fbms.runner.oracles import catenoid_oracle
from fbms.solver import certify_free_boundary, el_residual, teichmuller_solve

orc = catenoid_oracle()
print(f"s0 = {orc.s0:.15f}, conformal parameter t* = exp(2 s0) = {orc.t_star:.12f}")

# %% Its two boundary circles, sampled as band-limited maps into S^2
S2 = Sphere()
a, b = CircleMap.from_function(orc.inner, 32), CircleMap.from_function(orc.outer, 32)
print("Euler-Lagrange residual at t*:", el_residual(AnnulusBoundaryData(a, b, orc.t_star), S2).norm)

# %% Start from the wrong conformal parameter and let the solver find t*
rep = teichmuller_solve(AnnulusBoundaryData(a, b, 2.0), S2)
print(f"recovered t = {rep.t:.12f}  (error {abs(rep.t - orc.t_star):.2e})")
print(f"dE/dt = {rep.dE_dt:.2e}, Hopf constant = {rep.hopf_c:.2e}")
print("free boundary flags:", certify_free_boundary(rep, S2))

# %% Away from t* the same circles are not conformal: dE/dt and c are both nonzero
from fbms.annulus import conformality_defect, energy_derivative_t
off = AnnulusBoundaryData(a, b, 2.0)
print(f"at t=2: dE/dt = {energy_derivative_t(off):+.4f}, c = {conformality_defect(off):+.4f}")
