"""Two distinct sparse signals the noisy channel cannot tell apart.

The construction moves x by a small amount inside its own support, so the
measurements move by less than tau0 and no estimator can do better than
the distance between the two signals.
"""

import math

import numpy as np

from phaseonly.measurement import (
    InfeasibleConstruction,
    construct_indistinguishable_pair,
    draw_sensing_matrix,
    draw_sparse_signal,
    make_rng,
    phase,
)

n, m, s, tau0 = 200, 400, 8, 0.1
phi = draw_sensing_matrix(m, n, seed=8)
x = draw_sparse_signal(n, s, make_rng(8))

xp = construct_indistinguishable_pair(phi, x, s, tau0, "pre", seed=1)
print("pre-sign pair")
print(f"  ||x' - x||            = {np.linalg.norm(xp - x):.4f}  (floor tau0/(12 sqrt(log m)) = {tau0 / (12 * math.sqrt(math.log(m))):.4f})")
print(f"  ||Phi (x' - x)||_inf  = {np.max(np.abs(phi.entries @ (xp - x))):.4f}  (<= tau0 = {tau0})")

try:
    xq = construct_indistinguishable_pair(phi, x, s, tau0, "post", seed=1)
    gap = np.max(np.abs(phase(phi.entries @ xq) - phase(phi.entries @ x)))
    print("post-sign pair")
    print(f"  ||x' - x||                      = {np.linalg.norm(xq - x):.2e}")
    print(f"  ||sign(Phi x') - sign(Phi x)||_inf = {gap:.2e}  (<= tau0)")
except InfeasibleConstruction as exc:
    print("post-sign construction infeasible:", exc)
