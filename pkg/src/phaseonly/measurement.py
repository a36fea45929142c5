"""Complex Gaussian sensing, phase-only observations and noise channels.

Every channel returns a new :class:`ObservedPhases`; nothing is mutated in
place. Randomness is always drawn from an explicit ``numpy.random.Generator``
(see :func:`make_rng`) so that trials are reproducible stream by stream.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Optional, Union

import numpy as np

__all__ = [
    "SensingMatrix",
    "ObservedPhases",
    "PostSignDense",
    "PreSignDense",
    "SparseCorruption",
    "Combined",
    "NoiseSpec",
    "make_rng",
    "derive_seed",
    "draw_sensing_matrix",
    "draw_sparse_signal",
    "phase",
    "observe",
    "corruption_count",
    "apply_post_sign_dense",
    "apply_pre_sign_dense",
    "apply_sparse_corruption",
    "compose_combined",
    "apply_channel",
    "construct_indistinguishable_pair",
    "InfeasibleConstruction",
]

# below this modulus a complex number is treated as zero by phase()
PHASE_ZERO = 1e-300


class InfeasibleConstruction(ValueError):
    """Raised when an adversarial construction has no admissible solution."""


# ----------------------------------------------------------------------------
# RNG plumbing


def make_rng(*key: int) -> np.random.Generator:
    """Counter-based generator for the stream identified by ``key``.

    ``make_rng(base_seed, t)`` and ``make_rng(base_seed, g, t)`` give
    independent, bit-reproducible streams (Philox keyed by a SeedSequence).
    """
    if not key:
        raise ValueError("at least one key component is required")
    seq = np.random.SeedSequence(int(key[0]), spawn_key=tuple(int(k) for k in key[1:]))
    return np.random.Generator(np.random.Philox(seq))


def derive_seed(*key: int) -> int:
    """Unsigned 64-bit seed for the stream ``key`` (recorded in trial logs)."""
    seq = np.random.SeedSequence(int(key[0]), spawn_key=tuple(int(k) for k in key[1:]))
    lo, hi = seq.generate_state(2, dtype=np.uint32)
    return int(lo) | (int(hi) << 32)


# ----------------------------------------------------------------------------
# Data types


@dataclass(frozen=True)
class SensingMatrix:
    """Complex Gaussian matrix ``Phi`` with its seed provenance."""

    entries: np.ndarray
    seed: Optional[int] = None

    def __post_init__(self):
        a = np.asarray(self.entries, dtype=complex)
        if a.ndim != 2 or a.size == 0:
            raise ValueError(f"sensing matrix must be a non-empty 2-d array, got shape {a.shape}")
        if not np.all(np.isfinite(a)):
            raise ValueError("sensing matrix has non-finite entries")
        a.setflags(write=False)
        object.__setattr__(self, "entries", a)

    @property
    def m(self) -> int:
        return self.entries.shape[0]

    @property
    def n(self) -> int:
        return self.entries.shape[1]

    def __matmul__(self, x):
        return self.entries @ x


@dataclass(frozen=True)
class PostSignDense:
    tau0: float

    def __post_init__(self):
        if not self.tau0 >= 0:
            raise ValueError(f"tau0 must be non-negative, got {self.tau0}")


@dataclass(frozen=True)
class PreSignDense:
    tau0: float

    def __post_init__(self):
        if not self.tau0 >= 0:
            raise ValueError(f"tau0 must be non-negative, got {self.tau0}")


@dataclass(frozen=True)
class SparseCorruption:
    """Post-sign sparse corruption.

    ``mechanism`` is ``"largest-rotate-i"`` (rotate the phases of the
    largest-modulus measurements by ``i``) or ``"explicit"``, in which case
    ``zeta`` holds the additive corruption vector.
    """

    zeta0: float
    mechanism: str = "largest-rotate-i"
    zeta: Optional[np.ndarray] = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if not 0 <= self.zeta0 <= 1:
            raise ValueError(f"zeta0 must lie in [0, 1], got {self.zeta0}")
        if self.mechanism not in ("largest-rotate-i", "explicit"):
            raise ValueError(f"unknown corruption mechanism {self.mechanism!r}")
        if self.mechanism == "explicit" and self.zeta is None:
            raise ValueError("explicit mechanism needs a corruption vector")


@dataclass(frozen=True)
class Combined:
    tau0: float
    zeta0: float

    def __post_init__(self):
        if not self.tau0 >= 0:
            raise ValueError(f"tau0 must be non-negative, got {self.tau0}")
        if not 0 <= self.zeta0 <= 1:
            raise ValueError(f"zeta0 must lie in [0, 1], got {self.zeta0}")


NoiseSpec = Union[PostSignDense, PreSignDense, SparseCorruption, Combined]


@dataclass(frozen=True)
class ObservedPhases:
    """Observed (possibly perturbed) phases.

    ``channel`` is ``"clean"`` or the :data:`NoiseSpec` that produced the
    values; ``components`` keeps whatever perturbation vectors the channel
    injected, keyed by name.
    """

    values: np.ndarray
    channel: Any = "clean"
    corruption_support: Optional[np.ndarray] = None
    components: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=complex)
        if v.ndim != 1:
            raise ValueError("observations must be a 1-d array")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def __len__(self):
        return self.values.shape[0]

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.values, dtype=dtype)


# ----------------------------------------------------------------------------
# Sensing and observation


def draw_sensing_matrix(m: int, n: int, seed: int) -> SensingMatrix:
    """Draw ``Phi`` with i.i.d. N(0,1) + N(0,1)i entries."""
    if m < 1 or n < 1:
        raise ValueError(f"need m, n >= 1, got m={m}, n={n}")
    rng = make_rng(seed)
    g = rng.standard_normal((2, m, n))
    return SensingMatrix(g[0] + 1j * g[1], seed=int(seed))


def draw_sparse_signal(n: int, s: int, rng: np.random.Generator) -> np.ndarray:
    """Unit-norm s-sparse signal: uniform support, Gaussian coefficients."""
    if not 1 <= s <= n:
        raise ValueError(f"need 1 <= s <= n, got s={s}, n={n}")
    x = np.zeros(n)
    support = rng.choice(n, size=s, replace=False)
    coef = rng.standard_normal(s)
    while not np.any(coef):
        coef = rng.standard_normal(s)
    x[support] = coef / np.linalg.norm(coef)
    return x


def phase(c):
    """Complex phase ``c/|c|`` with the convention ``phase(0) = 1``.

    Works elementwise on arrays; a scalar input gives a Python complex.
    """
    arr = np.asarray(c, dtype=complex)
    mod = np.abs(arr)
    small = mod < PHASE_ZERO
    out = np.where(small, 1.0 + 0j, arr / np.where(small, 1.0, mod))
    if out.ndim == 0:
        return complex(out)
    return out


def _signal(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise ValueError("signal must be a 1-d real vector")
    return x


def _check_dims(phi: SensingMatrix, x: np.ndarray):
    if x.shape[0] != phi.n:
        raise ValueError(f"signal length {x.shape[0]} does not match n={phi.n}")


def observe(phi: SensingMatrix, x) -> ObservedPhases:
    """Noiseless phase-only observations ``phase(Phi x)``."""
    x = _signal(x)
    _check_dims(phi, x)
    return ObservedPhases(phase(phi.entries @ x), channel="clean")


def corruption_count(zeta0: float, m: int) -> int:
    """Number of corrupted entries, ``ceil(zeta0 * m)``.

    A relative slack of 1e-9 absorbs float noise such as ``(5/300)*300``.
    """
    k = math.ceil(zeta0 * m - 1e-9 * max(1.0, zeta0 * m))
    return max(0, min(k, m))


def apply_post_sign_dense(z: ObservedPhases, tau0: float) -> ObservedPhases:
    """Rotate every phase by ``theta0`` with chord length ``|e^{i theta0} - 1| = tau0``."""
    if tau0 < 0 or tau0 > math.sqrt(2) + 1e-15:
        raise ValueError(f"post-sign tau0 must lie in [0, sqrt(2)], got {tau0}")
    theta0 = 2.0 * math.asin(min(tau0 / 2.0, math.sqrt(2) / 2))
    rot = complex(math.cos(theta0), math.sin(theta0))
    zv = np.asarray(z.values)
    return ObservedPhases(
        rot * zv,
        channel=PostSignDense(tau0),
        components={"tau_post": (rot - 1.0) * zv},
    )


def apply_pre_sign_dense(phi: SensingMatrix, x, tau0: float) -> ObservedPhases:
    """Perturb ``Phi x`` by ``tau0 * i * phase(Phi x)`` before taking phases."""
    if tau0 < 0:
        raise ValueError(f"tau0 must be non-negative, got {tau0}")
    x = _signal(x)
    _check_dims(phi, x)
    b = phi.entries @ x
    tau = tau0 * 1j * phase(b)
    return ObservedPhases(
        phase(b + tau), channel=PreSignDense(tau0), components={"tau_pre": tau}
    )


def _largest_indices(values: np.ndarray, k: int) -> np.ndarray:
    # stable sort on -|.|: ties go to the lowest index
    order = np.argsort(-values, kind="stable")
    return np.sort(order[:k])


def apply_sparse_corruption(
    phi: SensingMatrix,
    x,
    z: ObservedPhases,
    zeta0: float,
    mechanism: str = "largest-rotate-i",
    zeta=None,
) -> ObservedPhases:
    """Corrupt ``k = ceil(zeta0 m)`` observed phases.

    ``largest-rotate-i`` multiplies by ``i`` the entries with the largest
    ``|Phi_i^* x|``. ``explicit`` adds the user-supplied ``zeta`` after
    checking ``||zeta||_0 <= k`` and ``||zeta||_inf <= 2``.
    """
    spec = SparseCorruption(zeta0, mechanism, None if zeta is None else np.asarray(zeta))
    zv = np.asarray(z.values)
    m = zv.shape[0]
    k = corruption_count(zeta0, m)
    if mechanism == "largest-rotate-i":
        x = _signal(x)
        _check_dims(phi, x)
        support = _largest_indices(np.abs(phi.entries @ x), k)
        zeta_vec = np.zeros(m, dtype=complex)
        zeta_vec[support] = (1j - 1.0) * zv[support]
    else:
        zeta_vec = np.asarray(zeta, dtype=complex)
        if zeta_vec.shape != (m,):
            raise ValueError(f"corruption vector must have length {m}")
        support = np.flatnonzero(zeta_vec)
        if support.size > k:
            raise ValueError(f"corruption has {support.size} nonzeros, at most {k} allowed")
        if np.max(np.abs(zeta_vec), initial=0.0) > 2.0 + 1e-12:
            raise ValueError("corruption entries must have modulus at most 2")
    return ObservedPhases(
        zv + zeta_vec,
        channel=spec,
        corruption_support=support,
        components={"zeta_post": zeta_vec},
    )


def _unit_phases(rng: np.random.Generator, size: int) -> np.ndarray:
    return np.exp(1j * rng.uniform(0.0, 2 * np.pi, size))


def compose_combined(
    phi: SensingMatrix,
    x,
    tau0: float,
    zeta0: float,
    seed: Optional[int] = None,
    *,
    rng: Optional[np.random.Generator] = None,
    tau_pre=None,
    zeta_pre=None,
    tau_post=None,
    zeta_post=None,
) -> ObservedPhases:
    """``phase(Phi x + tau_pre + zeta_pre) + tau_post + zeta_post``.

    Components not supplied are drawn: dense terms as ``tau0`` times a random
    unit phase per entry, sparse terms on uniformly drawn disjoint supports of
    size ``ceil(zeta0 m)`` with random values (pre-sign: modulus up to
    ``2 max|Phi x|``; post-sign: the difference between a random phase and the
    current one, so modulus at most 2).
    """
    x = _signal(x)
    _check_dims(phi, x)
    m = phi.m
    k = corruption_count(zeta0, m)
    if rng is None:
        rng = make_rng(0 if seed is None else seed)
    b = phi.entries @ x

    def dense(v, name):
        if v is None:
            return tau0 * _unit_phases(rng, m) if tau0 > 0 else np.zeros(m, dtype=complex)
        v = np.asarray(v, dtype=complex)
        if v.shape != (m,) or np.max(np.abs(v), initial=0.0) > tau0 + 1e-12:
            raise ValueError(f"{name} must have length {m} and max modulus <= tau0")
        return v

    tau1 = dense(tau_pre, "tau_pre")
    tau2 = dense(tau_post, "tau_post")

    supp1 = supp2 = None
    if (zeta_pre is None or zeta_post is None) and k > 0:
        # disjoint supports by rejection
        while True:
            supp1 = rng.choice(m, size=k, replace=False)
            supp2 = rng.choice(m, size=k, replace=False)
            if np.intersect1d(supp1, supp2).size == 0:
                break

    if zeta_pre is None:
        zeta1 = np.zeros(m, dtype=complex)
        if k > 0:
            scale = 2.0 * np.max(np.abs(b))
            zeta1[supp1] = scale * rng.uniform(0.0, 1.0, k) * _unit_phases(rng, k)
    else:
        zeta1 = np.asarray(zeta_pre, dtype=complex)
        if zeta1.shape != (m,) or np.count_nonzero(zeta1) > k:
            raise ValueError(f"zeta_pre must have length {m} and at most {k} nonzeros")

    inner = phase(b + tau1 + zeta1) + tau2

    if zeta_post is None:
        zeta2 = np.zeros(m, dtype=complex)
        if k > 0:
            target = _unit_phases(rng, k)
            zeta2[supp2] = target - phase(b[supp2] + tau1[supp2] + zeta1[supp2])
    else:
        zeta2 = np.asarray(zeta_post, dtype=complex)
        if zeta2.shape != (m,) or np.count_nonzero(zeta2) > k:
            raise ValueError(f"zeta_post must have length {m} and at most {k} nonzeros")
        if np.max(np.abs(zeta2), initial=0.0) > 2.0 + 1e-12:
            raise ValueError("zeta_post entries must have modulus at most 2")
    s1, s2 = np.flatnonzero(zeta1), np.flatnonzero(zeta2)
    if np.intersect1d(s1, s2).size:
        raise ValueError("pre- and post-sign corruption supports must be disjoint")

    return ObservedPhases(
        inner + zeta2,
        channel=Combined(tau0, zeta0),
        corruption_support=np.union1d(s1, s2),
        components={"tau_pre": tau1, "zeta_pre": zeta1, "tau_post": tau2, "zeta_post": zeta2},
    )


def apply_channel(
    phi: SensingMatrix, x, spec: Optional[NoiseSpec], rng: Optional[np.random.Generator] = None
) -> ObservedPhases:
    """Observe ``x`` through the channel described by ``spec`` (None = clean)."""
    if spec is None or spec == "clean":
        return observe(phi, x)
    if isinstance(spec, PostSignDense):
        return apply_post_sign_dense(observe(phi, x), spec.tau0)
    if isinstance(spec, PreSignDense):
        return apply_pre_sign_dense(phi, x, spec.tau0)
    if isinstance(spec, SparseCorruption):
        return apply_sparse_corruption(
            phi, x, observe(phi, x), spec.zeta0, spec.mechanism, spec.zeta
        )
    if isinstance(spec, Combined):
        return compose_combined(phi, x, spec.tau0, spec.zeta0, rng=rng)
    raise TypeError(f"unsupported noise spec {spec!r}")


# ----------------------------------------------------------------------------
# Indistinguishable pairs


def construct_indistinguishable_pair(
    phi: SensingMatrix,
    x,
    s: int,
    tau0: float,
    mode: str = "pre",
    seed: int = 0,
) -> np.ndarray:
    """Build a unit s-sparse ``x'`` that the channel cannot tell apart from ``x``.

    ``x' = (x + d) / ||x + d||`` with ``d`` supported inside an s-element set
    containing ``supp(x)``, ``d ⟂ x`` and ``||d|| = tau_star``.

    * ``mode="pre"``: ``tau_star = tau0 / (6 sqrt(log m))``; then
      ``Phi (x' - x)`` is a valid pre-sign perturbation with high probability.
    * ``mode="post"``: ``tau_star = tau0 s / (48 m sqrt(log m))`` (the
      ``C0 log(en/s)`` factor with ``C0 = m / (s log(en/s))``), and ``d`` is
      also forced into the null space of the rows ``Phi_i`` whose measurement
      modulus is at most ``s / (4m)``.

    Raises :class:`InfeasibleConstruction` when the linear constraints leave
    only the zero vector.
    """
    x = _signal(x)
    _check_dims(phi, x)
    m, n = phi.m, phi.n
    if mode not in ("pre", "post"):
        raise ValueError(f"mode must be 'pre' or 'post', got {mode!r}")
    supp = np.flatnonzero(x)
    if supp.size > s:
        raise ValueError(f"x has {supp.size} nonzeros, more than s={s}")
    if mode == "post" and s < 4:
        raise ValueError("post mode needs s >= 4")
    if not s <= n:
        raise ValueError("s must not exceed n")
    rng = make_rng(seed)
    rest = np.setdiff1d(np.arange(n), supp)
    support = np.sort(np.concatenate([supp, rng.choice(rest, size=s - supp.size, replace=False)]))

    logm = math.log(m)
    if mode == "pre":
        tau_star = tau0 / (6.0 * math.sqrt(logm))
        rows = np.asarray(x[support])[None, :]
    else:
        c0_log = m / s  # C0 * log(en/s) with C0 = m / (s log(en/s))
        tau_star = tau0 / (48.0 * c0_log * math.sqrt(logm))
        eta = s / (4.0 * m)
        small = np.flatnonzero(np.abs(phi.entries @ x) <= eta)
        block = phi.entries[np.ix_(small, support)]
        rows = np.vstack([x[support][None, :], block.real, block.imag])

    # orthonormal basis of the null space of the constraint rows
    _, sv, vt = np.linalg.svd(rows, full_matrices=True)
    rank = int(np.sum(sv > 1e-10 * max(1.0, sv.max(initial=0.0))))
    basis = vt[rank:].T
    if basis.shape[1] == 0:
        raise InfeasibleConstruction(
            f"{rows.shape[0]} constraints on a support of size {s} leave no nonzero direction"
        )
    d_s = basis @ rng.standard_normal(basis.shape[1])
    d_s *= tau_star / np.linalg.norm(d_s)
    d = np.zeros(n)
    d[support] = d_s
    xp = x + d
    return xp / np.linalg.norm(xp)
