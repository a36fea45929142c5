"""Empirical checks of the quantities the recovery guarantees rely on."""

import numpy as np

from phaseonly.diagnostics import (
    count_small_measurements,
    l1_concentration,
    perturbation_audit,
    rip_exhaustive,
    rip_monte_carlo,
)
from phaseonly.linearization import build_linearized
from phaseonly.measurement import (
    apply_pre_sign_dense,
    draw_sensing_matrix,
    draw_sparse_signal,
    make_rng,
    observe,
)

# RIP distortion of A_z: exact on a small instance, sampled at desk scale.
phi = draw_sensing_matrix(60, 24, seed=5)
x = draw_sparse_signal(24, 3, make_rng(5))
A = build_linearized(observe(phi, x), phi).A
exact = rip_exhaustive(A, 3)
sampled = rip_monte_carlo(A, 3, 5000, seed=0)
print(f"small A_z, t=3: exhaustive delta {exact.delta_lower:.3f}, sampled lower bound {sampled.delta_lower:.3f}")

phi = draw_sensing_matrix(300, 500, seed=6)
x = draw_sparse_signal(500, 5, make_rng(6))
A = build_linearized(observe(phi, x), phi).A
print(f"A_z at 300x500, t=10: sampled delta >= {rip_monte_carlo(A, 10, 2000, seed=1).delta_lower:.3f}")

# Few measurements have tiny modulus; those are the fragile ones under pre-sign noise.
big = draw_sensing_matrix(10_000, 20, seed=7)
xb = draw_sparse_signal(20, 4, make_rng(7))
for eta in (0.01, 0.1, 0.5):
    print(f"|J_(x,{eta})| = {count_small_measurements(big, xb, eta):5d}   (eta m = {eta * 10_000:.0f})")
print(f"| ||Phi x||_1 / (kappa m) - 1 | = {l1_concentration(big, xb):.4f}")

# Phase perturbation inequality, entry by entry.
z = observe(big, xb)
zb = apply_pre_sign_dense(big, xb, 0.3)
audit = perturbation_audit(zb, z, big, xb, 0.3j * z.values)
print(f"perturbation audit over {audit.checked} entries: max violation {audit.max_violation:.1e}")
