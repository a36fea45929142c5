"""Linearization of phase-only observations into real linear systems.

Given observed phases ``w`` the recovery problem becomes ``A_w u = e1`` with

    A_w = [ Re(w^* Phi) / (kappa m) ]
          [ Im(diag(w^*) Phi) / sqrt(m) ]

and ``kappa = sqrt(pi/2)``. The extended system appends an identity block
below the first row so that a sparse corruption footprint becomes a second
sparse unknown.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from .measurement import SensingMatrix, corruption_count

__all__ = [
    "KAPPA",
    "LinearizedSystem",
    "ExtendedSystem",
    "GroundTruth",
    "sensing_rows",
    "build_linearized",
    "build_extended",
    "ground_truth_scaled",
    "ground_truth_extended",
    "residual",
    "sparsity_defect",
]

KAPPA = math.sqrt(math.pi / 2)


def _as_phases(w) -> np.ndarray:
    values = getattr(w, "values", w)
    w = np.asarray(values, dtype=complex)
    if w.ndim != 1:
        raise ValueError("phase vector must be 1-d")
    return w


def _e1(size: int) -> np.ndarray:
    e = np.zeros(size)
    e[0] = 1.0
    return e


def sensing_rows(w, phi: SensingMatrix) -> np.ndarray:
    """Dense ``(m+1) x n`` matrix ``A_w``; linear in ``w``."""
    w = _as_phases(w)
    m = phi.m
    if w.shape[0] != m:
        raise ValueError(f"phase vector length {w.shape[0]} does not match m={m}")
    P = phi.entries
    top = (np.conj(w) @ P).real / (KAPPA * m)
    body = (np.conj(w)[:, None] * P).imag / math.sqrt(m)
    return np.vstack([top[None, :], body])


@dataclass(frozen=True)
class LinearizedSystem:
    """``A u = e1`` with noise radius ``epsilon``."""

    A: np.ndarray
    epsilon: float = 0.0
    kappa: float = KAPPA

    @property
    def rhs(self) -> np.ndarray:
        return _e1(self.A.shape[0])

    @property
    def shape(self):
        return self.A.shape

    def matvec(self, u):
        return self.A @ u

    def rmatvec(self, r):
        return self.A.T @ r

    def gram(self) -> np.ndarray:
        """``A A^T``."""
        return self.A @ self.A.T

    @property
    def weights(self) -> np.ndarray:
        return np.ones(self.A.shape[1])


@dataclass(frozen=True)
class ExtendedSystem:
    """``[A_w, [0; I_m]] (u; v) = e1``, identity block kept implicit.

    ``weights`` are the per-block l1 weights ``(1/sqrt(s), 1/sqrt(zeta0 m))``.
    """

    A: np.ndarray
    s: int
    zeta0: float
    block_weights: tuple = field(default=(1.0, 1.0))

    @property
    def n(self) -> int:
        return self.A.shape[1]

    @property
    def m(self) -> int:
        return self.A.shape[0] - 1

    @property
    def shape(self):
        return (self.A.shape[0], self.n + self.m)

    @property
    def rhs(self) -> np.ndarray:
        return _e1(self.A.shape[0])

    @property
    def epsilon(self) -> float:
        return 0.0

    @property
    def weights(self) -> np.ndarray:
        wu, wv = self.block_weights
        return np.concatenate([np.full(self.n, wu), np.full(self.m, wv)])

    def matvec(self, uv):
        uv = np.asarray(uv)
        out = self.A @ uv[: self.n]
        out[1:] += uv[self.n :]
        return out

    def rmatvec(self, r):
        r = np.asarray(r)
        return np.concatenate([self.A.T @ r, r[1:]])

    def gram(self) -> np.ndarray:
        G = self.A @ self.A.T
        idx = np.arange(1, G.shape[0])
        G[idx, idx] += 1.0
        return G

    def dense(self) -> np.ndarray:
        right = np.vstack([np.zeros((1, self.m)), np.eye(self.m)])
        return np.hstack([self.A, right])


@dataclass(frozen=True)
class GroundTruth:
    x_star: np.ndarray
    x_star_star: Optional[np.ndarray] = None
    x_zeta: Optional[np.ndarray] = None

    def stacked(self) -> np.ndarray:
        if self.x_star_star is None or self.x_zeta is None:
            raise ValueError("extended ground truth not available")
        return np.concatenate([self.x_star_star, self.x_zeta])


def build_linearized(w, phi: SensingMatrix, epsilon: float = 0.0) -> LinearizedSystem:
    """Linearized system ``A_w u = e1`` with radius ``epsilon``."""
    if epsilon < 0:
        raise ValueError(f"epsilon must be non-negative, got {epsilon}")
    return LinearizedSystem(sensing_rows(w, phi), float(epsilon))


def build_extended(w, phi: SensingMatrix, s: int, zeta0: float) -> ExtendedSystem:
    """Extended system with weights ``1/sqrt(s)`` and ``1/sqrt(k)``, ``k = ceil(zeta0 m)``."""
    if s < 1:
        raise ValueError(f"s must be positive, got {s}")
    k = corruption_count(zeta0, phi.m)
    if zeta0 <= 0 or k < 1:
        raise ValueError("zeta0 * m must be at least 1 for the extended program")
    return ExtendedSystem(
        sensing_rows(w, phi), int(s), float(zeta0), (1.0 / math.sqrt(s), 1.0 / math.sqrt(k))
    )


def ground_truth_scaled(phi: SensingMatrix, x) -> GroundTruth:
    """``x_star = kappa m x / ||Phi x||_1`` (complex moduli), so ``A_z x_star = e1``."""
    x = np.asarray(x, dtype=float)
    l1 = np.sum(np.abs(phi.entries @ x))
    if not l1 > 0:
        raise ValueError("||Phi x||_1 vanishes; x must be nonzero")
    return GroundTruth(KAPPA * phi.m * x / l1)


def ground_truth_extended(phi: SensingMatrix, x, z_breve, zeta) -> GroundTruth:
    """Ground truth ``(x_ss; x_zeta)`` of the extended system under corruption ``zeta``."""
    x = np.asarray(x, dtype=float)
    zb = _as_phases(z_breve)
    zeta = np.asarray(zeta, dtype=complex)
    b = phi.entries @ x
    denom = float(np.real(np.conj(zb) @ b))
    if abs(denom) < 1e-300:
        raise ValueError("Re(z^* Phi x) vanishes; extended ground truth undefined")
    x_ss = KAPPA * phi.m * x / denom
    # rows 1..m of the extended system require x_zeta = -Im(conj(zeta) Phi x_ss) / sqrt(m)
    x_zeta = -(np.conj(zeta) * (phi.entries @ x_ss)).imag / math.sqrt(phi.m)
    base = ground_truth_scaled(phi, x)
    return GroundTruth(base.x_star, x_ss, x_zeta)


def residual(system: Union[LinearizedSystem, ExtendedSystem], v) -> float:
    """``||A v - e1||_2``."""
    v = np.asarray(v, dtype=float)
    if v.shape != (system.shape[1],):
        raise ValueError(f"vector has shape {v.shape}, system expects ({system.shape[1]},)")
    r = system.matvec(v)
    r[0] -= 1.0
    return float(np.linalg.norm(r))


def sparsity_defect(x, s: int) -> float:
    """l1 distance from ``x`` to the s-sparse vectors (sum of the n-s smallest magnitudes)."""
    a = np.sort(np.abs(np.asarray(x, dtype=float)))
    n = a.shape[0]
    if not 0 <= s <= n:
        raise ValueError(f"need 0 <= s <= n, got s={s}, n={n}")
    return float(np.sum(a[: n - s]))
