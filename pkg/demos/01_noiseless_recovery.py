"""Recover a sparse signal from the phases of its complex Gaussian measurements.

Only the phases ``z = sign(Phi x)`` are observed, yet basis pursuit on the
linearized system ``A_z u = e1`` returns ``x`` up to its (unknown) norm.
"""

import numpy as np

from phaseonly import (
    build_linearized,
    draw_sensing_matrix,
    draw_sparse_signal,
    ground_truth_scaled,
    observe,
    recover,
    residual,
)
from phaseonly.measurement import make_rng

n, m, s = 500, 300, 5
phi = draw_sensing_matrix(m, n, seed=1)
x = draw_sparse_signal(n, s, make_rng(1))
z = observe(phi, x)
print(f"observed {m} unit-modulus phases, max | |z_i| - 1 | = {np.max(np.abs(np.abs(z.values) - 1)):.1e}")

# The scaled signal x_star solves the linear system exactly.
system = build_linearized(z, phi)
x_star = ground_truth_scaled(phi, x).x_star
print(f"||A_z x_star - e1|| = {residual(system, x_star):.1e}")

res = recover(phi, z, x=x)
print(f"solver: {res.solve.iterations} iterations, converged={res.solve.converged}")
print(f"||x_sharp - x|| = {res.l2_error:.2e}")
print("support recovered:", np.flatnonzero(np.abs(res.x_sharp) > 1e-6), "true:", np.flatnonzero(x))
