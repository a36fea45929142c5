"""Quick property checks runnable without a test framework.

Each check returns ``(name, passed, detail)``. ``scale`` shrinks the sample
counts for a fast smoke run (``scale=1`` uses the full counts).
"""

from __future__ import annotations

import math
from typing import Callable, List, Tuple

import numpy as np

from .diagnostics import (
    count_small_measurements,
    normalization_bound,
    phase_perturbation_bound,
    rip_exhaustive,
    rip_monte_carlo,
)
from .linearization import build_linearized, ground_truth_scaled, residual, sensing_rows
from .measurement import draw_sensing_matrix, draw_sparse_signal, make_rng, observe, phase
from .recovery import recover
from .solver import lp_oracle, qcbp

Check = Tuple[str, bool, str]


def check_phase_perturbation(count: int = 100_000, seed: int = 1) -> Check:
    rng = make_rng(seed, 1)
    a = (rng.standard_normal(count) + 1j * rng.standard_normal(count)) * rng.exponential(1, count)
    b = a + (rng.standard_normal(count) + 1j * rng.standard_normal(count)) * rng.exponential(1, count)
    gap = np.abs(phase(a) - phase(b)) - phase_perturbation_bound(a, b)
    worst = float(gap.max())
    return "phase perturbation inequality", worst <= 1e-12, f"max excess {worst:.3e} over {count} pairs"


def check_normalization(count: int = 10_000, seed: int = 2) -> Check:
    rng = make_rng(seed, 2)
    worst = -math.inf
    for _ in range(count):
        a = rng.standard_normal(8)
        b = a + rng.standard_normal(8) * rng.exponential()
        lhs = np.linalg.norm(a / np.linalg.norm(a) - b / np.linalg.norm(b))
        worst = max(worst, lhs - normalization_bound(a, b))
    return "normalization inequality", worst <= 1e-12, f"max excess {worst:.3e} over {count} pairs"


def check_linearity(count: int = 100, seed: int = 3) -> Check:
    rng = make_rng(seed, 3)
    phi = draw_sensing_matrix(30, 20, seed)
    worst = 0.0
    for _ in range(count):
        w1 = rng.standard_normal(30) + 1j * rng.standard_normal(30)
        w2 = rng.standard_normal(30) + 1j * rng.standard_normal(30)
        a, b = rng.standard_normal(2)
        lhs = sensing_rows(a * w1 + b * w2, phi)
        rhs = a * sensing_rows(w1, phi) + b * sensing_rows(w2, phi)
        worst = max(worst, float(np.max(np.abs(lhs - rhs))))
    return "A_w linearity", worst <= 1e-12, f"max entry gap {worst:.3e}"


def check_ground_truth(count: int = 100, seed: int = 4) -> Check:
    worst = 0.0
    for t in range(count):
        phi = draw_sensing_matrix(60, 100, seed + t)
        x = draw_sparse_signal(100, 5, make_rng(seed, 4, t))
        sys_ = build_linearized(observe(phi, x), phi)
        worst = max(worst, residual(sys_, ground_truth_scaled(phi, x).x_star))
    return "ground-truth identity", worst <= 1e-10, f"max residual {worst:.3e}"


def check_rip_ordering(count: int = 20, seed: int = 5) -> Check:
    ok = True
    for t in range(count):
        rng = make_rng(seed, 5, t)
        A = rng.standard_normal((8, 12)) / math.sqrt(8)
        exact = rip_exhaustive(A, 2).delta_lower
        sampled = rip_monte_carlo(A, 2, 500, seed=t).delta_lower
        ok &= sampled <= exact + 1e-12
    return "rip_monte_carlo <= rip_exhaustive", bool(ok), f"{count} instances"


def check_small_measurements(m: int = 10_000, trials: int = 20, seed: int = 6) -> Check:
    below = 0
    mono = True
    for t in range(trials):
        phi = draw_sensing_matrix(m, 10, seed + t)
        x = draw_sparse_signal(10, 3, make_rng(seed, 6, t))
        counts = [count_small_measurements(phi, x, eta) for eta in (0.05, 0.1, 0.2)]
        mono &= counts[0] <= counts[1] <= counts[2]
        below += counts[1] <= 0.1 * m
    return ("J_{x,eta} monotone, |J| <= eta m", bool(mono) and below >= 0.95 * trials,
            f"{below}/{trials} within eta m")


def check_solver_oracle(count: int = 50, seed: int = 7) -> Check:
    worst = 0.0
    for t in range(count):
        rng = make_rng(seed, 7, t)
        M = int(rng.integers(3, 8))
        N = int(rng.integers(M + 2, 15))
        A = rng.standard_normal((M, N))
        u = np.zeros(N)
        u[rng.choice(N, 2, replace=False)] = rng.standard_normal(2)
        y = A @ u
        ref = np.abs(lp_oracle(A, y)).sum()
        got = qcbp(A, y, 0.0).objective
        worst = max(worst, abs(got - ref))
    return "qcbp vs LP oracle", worst <= 1e-6, f"max objective gap {worst:.3e}"


def check_noiseless_recovery(trials: int = 5, seed: int = 8) -> Check:
    errs = []
    for t in range(trials):
        phi = draw_sensing_matrix(120, 200, seed + t)
        x = draw_sparse_signal(200, 4, make_rng(seed, 8, t))
        errs.append(recover(phi, observe(phi, x), epsilon=0.0, x=x).l2_error)
    worst = max(errs)
    return "noiseless recovery", worst <= 1e-5, f"max error {worst:.3e}"


def run_all(scale: float = 1.0) -> List[Check]:
    def n(k):
        return max(1, int(k * scale))

    checks: List[Callable[[], Check]] = [
        lambda: check_phase_perturbation(n(100_000)),
        lambda: check_normalization(n(10_000)),
        lambda: check_linearity(n(100)),
        lambda: check_ground_truth(n(100)),
        lambda: check_rip_ordering(n(20)),
        lambda: check_small_measurements(trials=n(20)),
        lambda: check_solver_oracle(n(50)),
        lambda: check_noiseless_recovery(n(5)),
    ]
    return [c() for c in checks]
