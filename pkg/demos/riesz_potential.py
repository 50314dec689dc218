"""Riesz potentials of radial densities.

Newton's shell theorem is the classic check: in three dimensions with
k = -1 the potential outside a ball is M/|x|. For other kernels the
potential still decays like |x|^k far away, with a constant that the
decay diagnostic compares against its analytic envelope.
"""

import numpy as np

from aggdiff import RadialGrid, make_params, radial_from_function, riesz_potential, uniform_ball
from aggdiff.riesz import decay_envelope_check, riesz_potential_at

params = make_params(3, -1.0, 2.0, 1.0)
ball = uniform_ball(RadialGrid(4.0, 256), 3, R=1.0)
r = np.array([1.5, 2.0, 3.0])
print("N=3, k=-1, unit ball")
for ri, raw in zip(r, riesz_potential_at(ball, params, r)):
    print(f"  r = {ri:.1f}: raw potential {raw:.12f}, 1/r = {1 / ri:.12f}")

print("\nfar-field envelopes for a compactly supported bump")
for N, k in ((2, -0.5), (2, -1.0), (3, -2.5)):
    p = make_params(N, k, 2.0, 1.0)
    rho = radial_from_function(lambda x: np.maximum(1 - x * x, 0.0), RadialGrid(5.0, 200), N)
    rep = decay_envelope_check(riesz_potential(rho, p), 1.0, p)
    print(
        f"  N={N} k={k:+.1f} ({rep.branch}): max upper ratio {rep.upper_ratio.max():.4f} "
        f"<= {rep.upper_constant:.4f}, min lower ratio {rep.lower_ratio.min():.4f} >= 1"
    )
