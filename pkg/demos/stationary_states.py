"""Stationary states from the Euler-Lagrange fixed point.

In three dimensions with the Newtonian kernel and m = 2 the stationary
profile is known in closed form, sin(w r) / (2 pi r) with w^2 = 2 pi, which
makes a good first look at the solver. On the line, the support size
depends strongly on the parameters, so the domain is fitted first.
"""

import math

import numpy as np

from aggdiff import LineGrid, RadialGrid, make_params, solve_stationary
from aggdiff.stationary import fit_line_domain, uniqueness_harness

p3 = make_params(3, -1.0, 2.0, 1.0)
rep = solve_stationary(p3, grid=RadialGrid(4.0, 512))
w = math.sqrt(2 * math.pi)
print("N=3, k=-1, m=2")
print(f"  support radius {rep.support_radius:.4f} (exact {math.pi / w:.4f})")
print(f"  max rho        {rep.profile.values.max():.6f} (exact {1 / w:.6f})")
print(f"  EL residual    {rep.el_residual:.1e} after {rep.iterations} iterations")

for k, m, chi in ((-0.5, 1.8, 1.0), (-0.5, 2.5, 1.0), (-0.8, 1.9, 2.0)):
    p = make_params(1, k, m, chi)
    L = fit_line_domain(p)
    rep = solve_stationary(p, grid=LineGrid(L, 512))
    uq = uniqueness_harness(p, LineGrid(L, 256))
    print(f"\nN=1, k={k}, m={m}, chi={chi}: domain half-width {L:.4g}")
    print(f"  support {rep.support_radius:.4g}, F = {rep.energy.F:.8g}, max rho {np.max(rep.profile.values):.4g}")
    print(f"  EL residual {rep.el_residual:.1e}, integral identity residual {rep.char_residual_1d:.1e}")
    print(f"  three starting points agree to {uq.max_distance:.1e} in L1")
