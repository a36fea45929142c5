"""Empirical certificates for the quantities the recovery guarantees rest on.

RIP distortion of a matrix over sparse cones (exact by enumeration on small
instances, a sampled lower bound otherwise), the count of small-modulus
measurements, l1 concentration of ``Phi x``, and audits of the phase
perturbation inequality.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Optional, Tuple, Union

import numpy as np

from .linearization import KAPPA
from .measurement import SensingMatrix, make_rng, phase

__all__ = [
    "RipEstimate",
    "PerturbationAudit",
    "EXHAUSTIVE_CAP",
    "rip_exhaustive",
    "rip_monte_carlo",
    "count_small_measurements",
    "l1_concentration",
    "phase_perturbation_bound",
    "normalization_bound",
    "perturbation_audit",
    "phase_gap",
]

EXHAUSTIVE_CAP = 200_000

# cone descriptor: sparsity t over all columns, or (n1, t1, t2) for the
# product of t1-sparse vectors in the first n1 columns and t2-sparse in the rest
Cone = Union[int, Tuple[int, int, int]]


@dataclass(frozen=True)
class RipEstimate:
    cone: Cone
    delta_lower: float
    method: str
    certified: bool
    samples: Optional[int] = None


def _supports(n: int, cone: Cone):
    if isinstance(cone, tuple):
        n1, t1, t2 = cone
        first = itertools.combinations(range(n1), t1)
        return (a + tuple(n1 + j for j in b)
                for a, b in itertools.product(
                    first, list(itertools.combinations(range(n - n1), t2))))
    return itertools.combinations(range(n), cone)


def _support_count(n: int, cone: Cone) -> int:
    if isinstance(cone, tuple):
        n1, t1, t2 = cone
        return math.comb(n1, t1) * math.comb(n - n1, t2)
    return math.comb(n, cone)


def rip_exhaustive(A, t: Cone, cap: int = EXHAUSTIVE_CAP) -> RipEstimate:
    """Exact RIP distortion of ``A`` over the cone ``t``.

    For each support ``S`` the extreme eigenvalues of ``A_S^T A_S`` give
    ``max(lmax - 1, 1 - lmin)``; the maximum over supports is returned.
    """
    A = np.asarray(A, dtype=float)
    n = A.shape[1]
    count = _support_count(n, t)
    if count > cap:
        raise ValueError(
            f"{count} supports exceed the exhaustive cap {cap}; use rip_monte_carlo"
        )
    G = A.T @ A
    delta = 0.0
    it = _supports(n, t)
    while True:
        batch = np.array(list(itertools.islice(it, 20000)), dtype=int)
        if batch.size == 0:
            break
        sub = G[batch[:, :, None], batch[:, None, :]]
        ev = np.linalg.eigvalsh(sub)
        delta = max(delta, float(np.max(np.maximum(ev[:, -1] - 1.0, 1.0 - ev[:, 0]))))
    return RipEstimate(cone=t, delta_lower=delta, method="exhaustive", certified=True)


def _random_sparse(n: int, cone: Cone, rng, count: int) -> np.ndarray:
    U = np.zeros((count, n))
    for row in U:
        if isinstance(cone, tuple):
            n1, t1, t2 = cone
            idx = np.concatenate([rng.choice(n1, t1, replace=False),
                                  n1 + rng.choice(n - n1, t2, replace=False)])
        else:
            idx = rng.choice(n, cone, replace=False)
        row[idx] = rng.standard_normal(idx.size)
    nrm = np.linalg.norm(U, axis=1, keepdims=True)
    nrm[nrm == 0] = 1.0
    return U / nrm


def rip_monte_carlo(A, t: Cone, samples: int, seed: int = 0) -> RipEstimate:
    """Sampled lower bound on the RIP distortion (never certified)."""
    if samples < 1:
        raise ValueError("samples must be at least 1")
    A = np.asarray(A, dtype=float)
    n = A.shape[1]
    rng = make_rng(seed)
    delta = 0.0
    done = 0
    while done < samples:
        b = min(4096, samples - done)
        U = _random_sparse(n, t, rng, b)
        q = np.sum((U @ A.T) ** 2, axis=1)
        delta = max(delta, float(np.max(np.abs(q - 1.0))))
        done += b
    return RipEstimate(cone=t, delta_lower=delta, method="monte-carlo",
                       certified=False, samples=samples)


def count_small_measurements(phi: SensingMatrix, x, eta: float) -> int:
    """Size of ``{i : |Phi_i^* x| <= eta}``."""
    if eta < 0:
        raise ValueError("eta must be non-negative")
    return int(np.count_nonzero(np.abs(phi.entries @ np.asarray(x, dtype=float)) <= eta))


def l1_concentration(phi: SensingMatrix, x) -> float:
    """``| ||Phi x||_1 / (kappa m) - 1 |`` for ``x`` normalized to unit length."""
    x = np.asarray(x, dtype=float)
    nrm = np.linalg.norm(x)
    if nrm == 0:
        raise ValueError("x must be nonzero")
    l1 = np.sum(np.abs(phi.entries @ (x / nrm)))
    return float(abs(l1 / (KAPPA * phi.m) - 1.0))


def phase_perturbation_bound(a, b):
    """``min(2|a-b| / max(|a|,|b|), 2)`` elementwise, with ``x/0 = inf``."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    den = np.maximum(np.abs(a), np.abs(b))
    num = 2.0 * np.abs(a - b)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(den > 0, num / np.where(den > 0, den, 1.0), np.inf)
    return np.minimum(ratio, 2.0)


def normalization_bound(a, b) -> float:
    """``min(2||a-b|| / max(||a||,||b||), 2)`` for real vectors."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    den = max(np.linalg.norm(a), np.linalg.norm(b))
    if den == 0:
        return 2.0
    return min(2.0 * float(np.linalg.norm(a - b)) / den, 2.0)


@dataclass(frozen=True)
class PerturbationAudit:
    checked: int
    max_violation: float
    worst_index: Optional[int]
    fallback_entries: int


def perturbation_audit(z_breve, z, phi: SensingMatrix, x, delta=None) -> PerturbationAudit:
    """Check ``|z_breve_i - z_i| <= min(2|d_i| / max(|b_i + d_i|, |b_i|), 2)``, ``b = Phi x``.

    ``delta`` is the known pre-sign perturbation (zero if omitted). Entries
    with ``b_i = 0`` and ``b_i + d_i = 0`` fall back to the constant bound 2.
    """
    zb = np.asarray(getattr(z_breve, "values", z_breve), dtype=complex)
    zc = np.asarray(getattr(z, "values", z), dtype=complex)
    b = phi.entries @ np.asarray(x, dtype=float)
    d = np.zeros_like(b) if delta is None else np.asarray(delta, dtype=complex)
    if not (zb.shape == zc.shape == b.shape == d.shape):
        raise ValueError("dimension mismatch in perturbation audit")
    bound = phase_perturbation_bound(b + d, b)
    gap = np.abs(zb - zc) - bound
    worst = int(np.argmax(gap)) if gap.size else None
    fallback = int(np.count_nonzero(np.maximum(np.abs(b + d), np.abs(b)) == 0))
    return PerturbationAudit(
        checked=int(gap.size),
        max_violation=float(max(0.0, gap.max(initial=0.0))),
        worst_index=worst,
        fallback_entries=fallback,
    )


def phase_gap(a, b) -> np.ndarray:
    """``|phase(a) - phase(b)|`` elementwise."""
    return np.abs(phase(a) - phase(b))
