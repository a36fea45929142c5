"""End-to-end estimators from observed phases.

``recover`` linearizes the observations, picks the noise radius and solves
basis pursuit; ``recover_extended`` solves the weighted program on the
extended system, which absorbs sparse corruption exactly.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .linearization import (
    build_extended,
    build_linearized,
    ground_truth_scaled,
    residual,
)
from .measurement import (
    Combined,
    NoiseSpec,
    PostSignDense,
    PreSignDense,
    SensingMatrix,
    SparseCorruption,
    corruption_count,
)
from .solver import SolveReport, SolverOptions, qcbp, weighted_bp_equality

__all__ = [
    "DEFAULT_COMBINED_CONSTANTS",
    "RecoveryResult",
    "epsilon_for",
    "recover",
    "recover_extended",
    "powerlaw_signal",
]

log = logging.getLogger(__name__)

DEFAULT_COMBINED_CONSTANTS = (4.0, 11.0, 3.0)


@dataclass
class RecoveryResult:
    x_hat: np.ndarray
    x_sharp: np.ndarray
    epsilon_used: float
    solve: SolveReport
    residual_at_truth: Optional[float] = None
    l2_error: Optional[float] = None
    degenerate: bool = False
    w_hat: Optional[np.ndarray] = None


def _xlogx_term(zeta0: float) -> float:
    # zeta0 * log(e / zeta0), with the 0 * log(inf) = 0 convention
    if zeta0 <= 0:
        return 0.0
    return zeta0 * math.log(math.e / zeta0)


def epsilon_for(
    spec: Optional[NoiseSpec],
    mode: str = "theorem",
    *,
    phi: Optional[SensingMatrix] = None,
    x=None,
    z_breve=None,
    s: Optional[int] = None,
    constants: Optional[Sequence[float]] = None,
) -> float:
    """Noise radius for basis pursuit.

    Theorem mode uses the per-channel choices ``5 tau0 / 2`` (post-sign),
    ``4 tau0`` (pre-sign), ``11 zeta0 log(e/zeta0)`` (sparse corruption) and
    ``C1 tau0 + C2 sqrt(zeta0 log(e/zeta0)) + C3 sqrt(s log(en/s)/m)``
    (combined; needs ``phi`` and ``s``). Oracle mode returns the exact
    residual ``||A_z x_star - e1||`` and needs ``phi``, ``x`` and ``z_breve``.
    """
    if mode == "oracle":
        if phi is None or x is None or z_breve is None:
            raise ValueError("oracle epsilon needs phi, x and z_breve")
        system = build_linearized(z_breve, phi)
        return residual(system, ground_truth_scaled(phi, x).x_star)
    if mode != "theorem":
        raise ValueError(f"unknown epsilon mode {mode!r}")

    if spec is None or spec == "clean":
        return 0.0
    if isinstance(spec, PostSignDense):
        return 2.5 * spec.tau0
    if isinstance(spec, PreSignDense):
        return 4.0 * spec.tau0
    if isinstance(spec, SparseCorruption):
        return 11.0 * _xlogx_term(spec.zeta0)
    if isinstance(spec, Combined):
        if phi is None or s is None:
            raise ValueError("combined epsilon needs phi (for m, n) and s")
        if constants is None:
            constants = DEFAULT_COMBINED_CONSTANTS
            log.info("combined epsilon: using default constants C1, C2, C3 = %s", constants)
        c1, c2, c3 = constants
        m, n = phi.m, phi.n
        return (
            c1 * spec.tau0
            + c2 * math.sqrt(_xlogx_term(spec.zeta0))
            + c3 * math.sqrt(s * math.log(math.e * n / s) / m)
        )
    raise TypeError(f"unsupported noise spec {spec!r}")


def _finish(x_hat, report, eps, phi, x, z_breve, w_hat=None) -> RecoveryResult:
    nrm = float(np.linalg.norm(x_hat))
    degenerate = nrm == 0.0
    x_sharp = np.zeros_like(x_hat) if degenerate else x_hat / nrm
    res = RecoveryResult(
        x_hat=x_hat, x_sharp=x_sharp, epsilon_used=float(eps), solve=report,
        degenerate=degenerate, w_hat=w_hat,
    )
    if x is not None:
        x = np.asarray(x, dtype=float)
        res.l2_error = float(np.linalg.norm(x_sharp - x))
        system = build_linearized(z_breve, phi)
        res.residual_at_truth = residual(system, ground_truth_scaled(phi, x).x_star)
    return res


def recover(
    phi: SensingMatrix,
    z_breve,
    spec: Optional[NoiseSpec] = None,
    opts: Optional[SolverOptions] = None,
    *,
    epsilon_mode: str = "theorem",
    epsilon: Optional[float] = None,
    x=None,
    s: Optional[int] = None,
    constants: Optional[Sequence[float]] = None,
) -> RecoveryResult:
    """Estimate ``x`` from ``z_breve`` by basis pursuit on ``A_z``.

    ``epsilon`` overrides the radius; otherwise it is chosen by
    :func:`epsilon_for`. When the true ``x`` is given, the result also
    carries the l2 error and the residual of the scaled ground truth.
    A zero solution (possible when the radius exceeds 1) gives a zero
    estimate flagged ``degenerate``.
    """
    if epsilon is None:
        epsilon = epsilon_for(
            spec, epsilon_mode, phi=phi, x=x, z_breve=z_breve, s=s, constants=constants
        )
    system = build_linearized(z_breve, phi, epsilon)
    report = qcbp(system.A, system.rhs, system.epsilon, opts)
    return _finish(report.solution, report, epsilon, phi, x, z_breve)


def recover_extended(
    phi: SensingMatrix,
    z_breve,
    s: int,
    zeta0: float,
    opts: Optional[SolverOptions] = None,
    *,
    x=None,
) -> RecoveryResult:
    """Estimate ``x`` by weighted l1 minimization on the extended system.

    With no corruption budget (``ceil(zeta0 m) = 0``) the corruption block
    carries an infinite weight, so the program is plain noiseless basis
    pursuit and :func:`recover` is used.
    """
    if corruption_count(zeta0, phi.m) == 0:
        return recover(phi, z_breve, None, opts, epsilon=0.0, x=x)
    system = build_extended(z_breve, phi, s, zeta0)
    report = weighted_bp_equality(system, opts)
    n = system.n
    return _finish(
        report.solution[:n], report, 0.0, phi, x, z_breve, w_hat=report.solution[n:]
    )


def powerlaw_signal(n: int, q: float, rng: np.random.Generator) -> np.ndarray:
    """Unit-norm compressible signal ``x_i ∝ i^-q``, randomly signed and permuted."""
    mags = np.arange(1, n + 1, dtype=float) ** (-float(q))
    x = np.zeros(n)
    x[rng.permutation(n)] = mags * rng.choice([-1.0, 1.0], size=n)
    return x / np.linalg.norm(x)
