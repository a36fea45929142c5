"""Weighted l1 minimization under an l2 (or equality) data constraint.

``qcbp`` solves::

    minimize    sum_j w_j |u_j|
    subject to  ||A u - y||_2 <= eps

with ADMM on the splitting ``u = z`` (l1 block, soft-thresholded) and
``A u - y = v`` (projected onto the eps-ball, or onto {0} when eps = 0).
The u-update solves ``(I + A^T A) u = rhs``; its inverse is applied through
the Woodbury identity with a Cholesky factor of ``I + A A^T`` computed once
per system. Because both coupling terms carry the same penalty, the factor
does not depend on rho, so rho can be adapted freely.

With ``eps = 0`` the iterate is periodically polished: once its support is
stable, the equality system is solved exactly on that support and accepted
only if a dual vector certifies optimality (KKT conditions within the solver
tolerances). This finishes non-sparse solutions that ADMM approaches slowly.

``lp_oracle`` is an independent exact solver for tiny instances: it
enumerates the basic feasible solutions of the equality-constrained LP.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.linalg import cho_factor, cho_solve

__all__ = [
    "SolverOptions",
    "SolveReport",
    "DenseOperator",
    "soft_threshold",
    "project_ball",
    "qcbp",
    "weighted_bp_equality",
    "weighted_qcbp",
    "lp_oracle",
    "OracleTooLarge",
]


@dataclass(frozen=True)
class SolverOptions:
    rho: float = 1.0
    tol_primal: float = 1e-9
    tol_dual: float = 1e-9
    max_iter: int = 50000
    alpha: float = 1.6
    # residual balancing on rho (free: the cached factor is rho-independent)
    adaptive_rho: bool = True

    def __post_init__(self):
        if not self.rho > 0:
            raise ValueError("rho must be positive")
        if not (self.tol_primal > 0 and self.tol_dual > 0):
            raise ValueError("tolerances must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")
        if not 1.0 <= self.alpha <= 1.9:
            raise ValueError("over-relaxation alpha must lie in [1, 1.9]")


@dataclass
class SolveReport:
    solution: np.ndarray
    iterations: int
    primal_residual: float
    dual_residual: float
    converged: bool
    objective: float
    constraint_violation: float = 0.0
    best_objective_trace: list = field(default_factory=list, repr=False)


class DenseOperator:
    """Adapter giving a plain matrix the ``matvec/rmatvec/gram`` interface."""

    def __init__(self, A):
        self.A = np.asarray(A, dtype=float)
        if self.A.ndim != 2:
            raise ValueError("A must be a 2-d array")

    @property
    def shape(self):
        return self.A.shape

    def matvec(self, u):
        return self.A @ u

    def rmatvec(self, r):
        return self.A.T @ r

    def gram(self):
        return self.A @ self.A.T


def soft_threshold(x, thresh):
    """Proximal map of ``thresh * |.|`` (elementwise; ``thresh`` may be an array)."""
    return np.sign(x) * np.maximum(np.abs(x) - thresh, 0.0)


def project_ball(v, radius: float):
    """Euclidean projection onto the centered l2 ball of ``radius`` (``{0}`` if 0)."""
    if radius <= 0:
        return np.zeros_like(v)
    nv = np.linalg.norm(v)
    if nv <= radius:
        return v
    return v * (radius / nv)


def _operator(A):
    if hasattr(A, "matvec") and hasattr(A, "gram"):
        return A
    return DenseOperator(A)


def _dense(op) -> Optional[np.ndarray]:
    if hasattr(op, "dense"):
        return op.dense()
    return getattr(op, "A", None)


def _polish(Ad, y, w, z, lam0, opts):
    """Exact solve on ``supp(z)`` with a dual optimality certificate, or None."""
    S = np.flatnonzero(z)
    if S.size == 0 or S.size > Ad.shape[0]:
        return None
    AS = Ad[:, S]
    uS = np.linalg.lstsq(AS, y, rcond=None)[0]
    primal = float(np.linalg.norm(AS @ uS - y))
    if primal > opts.tol_primal or np.any(np.sign(uS) != np.sign(z[S])):
        return None
    # dual vector: ADMM multiplier corrected so A_S^T lam = w_S sign(u_S)
    c = w[S] * np.sign(uS)
    lam = lam0 + np.linalg.lstsq(AS.T, c - AS.T @ lam0, rcond=None)[0]
    if np.linalg.norm(AS.T @ lam - c) > opts.tol_dual:
        return None
    dual = float(np.max(np.abs(Ad.T @ lam) - w))
    if dual > opts.tol_dual:
        return None
    u = np.zeros_like(z)
    u[S] = uS
    return u, primal, max(dual, 0.0)


def weighted_qcbp(A, y, eps: float, weights=None, opts: Optional[SolverOptions] = None) -> SolveReport:
    """ADMM for ``min sum w_j |u_j|  s.t. ||A u - y|| <= eps``.

    ``A`` is a dense matrix or any object with ``shape``, ``matvec``,
    ``rmatvec`` and ``gram`` (``A A^T``). Returns the thresholded iterate,
    which is exactly sparse. On non-convergence the best feasible iterate seen
    is returned with ``converged=False``.
    """
    opts = opts or SolverOptions()
    op = _operator(A)
    M, N = op.shape
    y = np.asarray(y, dtype=float)
    if y.shape != (M,):
        raise ValueError(f"y has shape {y.shape}, expected ({M},)")
    if eps < 0:
        raise ValueError("eps must be non-negative")
    w = np.ones(N) if weights is None else np.asarray(weights, dtype=float)
    if w.shape != (N,) or np.any(w < 0):
        raise ValueError("weights must be a non-negative vector of length n")

    K = op.gram()
    K[np.diag_indices_from(K)] += 1.0
    chol = cho_factor(K, lower=True, check_finite=False)

    def solve_normal(b):
        return b - op.rmatvec(cho_solve(chol, op.matvec(b), check_finite=False))

    rho = opts.rho
    alpha = opts.alpha
    feas_slack = 10.0 * opts.tol_primal

    z = np.zeros(N)
    v = project_ball(-y, eps)
    p = np.zeros(N)
    q = np.zeros(M)
    # A^T (y + v - q) is carried incrementally via these products
    x = z
    best = None
    best_obj = math.inf
    best_viol = math.inf
    trace = []
    Ad = _dense(op) if eps == 0 else None
    last_support = None
    r_norm = s_norm = math.inf
    converged = False
    it = 0
    for it in range(1, opts.max_iter + 1):
        x = solve_normal(z - p + op.rmatvec(y + v - q))
        Ax_y = op.matvec(x) - y

        xh = alpha * x + (1.0 - alpha) * z
        rh = alpha * Ax_y + (1.0 - alpha) * v

        z_old, v_old = z, v
        z = soft_threshold(xh + p, w / rho)
        v = project_ball(rh + q, eps)
        p = p + xh - z
        q = q + rh - v

        if it % 10 == 0 or it == opts.max_iter:
            r_norm = math.sqrt(np.sum((x - z) ** 2) + np.sum((Ax_y - v) ** 2))
            dz = z - z_old
            s_norm = rho * float(np.linalg.norm(dz + op.rmatvec(v - v_old)))

            viol = max(0.0, float(np.linalg.norm(op.matvec(z) - y)) - eps)
            obj = float(np.dot(w, np.abs(z)))
            if viol <= feas_slack and obj <= best_obj:
                best, best_obj, best_viol = z.copy(), obj, viol
            trace.append(best_obj)

            if r_norm <= opts.tol_primal and s_norm <= opts.tol_dual and viol <= feas_slack:
                converged = True
                break

            if Ad is not None and it % 100 == 0:
                support = np.flatnonzero(z)
                if last_support is not None and np.array_equal(support, last_support):
                    polished = _polish(Ad, y, w, z, -rho * q, opts)
                    if polished is not None:
                        z, r_norm, s_norm = polished
                        converged = True
                        break
                last_support = support

            if opts.adaptive_rho and it % 50 == 0:
                if r_norm > 10.0 * s_norm:
                    rho *= 2.0
                    p /= 2.0
                    q /= 2.0
                elif s_norm > 10.0 * r_norm:
                    rho /= 2.0
                    p *= 2.0
                    q *= 2.0

    if converged or best is None:
        sol = z
        viol = max(0.0, float(np.linalg.norm(op.matvec(z) - y)) - eps)
    else:
        sol, viol = best, best_viol
    return SolveReport(
        solution=sol,
        iterations=it,
        primal_residual=float(r_norm),
        dual_residual=float(s_norm),
        converged=converged,
        objective=float(np.dot(w, np.abs(sol))),
        constraint_violation=viol,
        best_objective_trace=trace,
    )


def qcbp(A, y, eps: float = 0.0, opts: Optional[SolverOptions] = None) -> SolveReport:
    """Quadratically constrained basis pursuit ``min ||u||_1 s.t. ||A u - y||_2 <= eps``."""
    return weighted_qcbp(A, y, eps, None, opts)


def weighted_bp_equality(system, opts: Optional[SolverOptions] = None) -> SolveReport:
    """Equality-constrained weighted l1 program on an extended system.

    ``system`` must provide ``weights`` and ``rhs`` (see
    :class:`phaseonly.linearization.ExtendedSystem`).
    """
    return weighted_qcbp(system, system.rhs, 0.0, system.weights, opts)


# ----------------------------------------------------------------------------
# Exact oracle


class OracleTooLarge(ValueError):
    pass


def lp_oracle(A, y, weights=None, max_dim: int = 40, max_bases: int = 2_000_000) -> np.ndarray:
    """Exact weighted l1 minimizer of ``A u = y`` by basis enumeration.

    The LP ``min w^T (u+ + u-)  s.t.  A (u+ - u-) = y`` has an optimal basic
    feasible solution; each one corresponds to a set of ``rank(A)`` linearly
    independent columns of ``A``. All such sets are enumerated and the
    cheapest consistent solution is returned.
    """
    A = np.asarray(A, dtype=float)
    y = np.asarray(y, dtype=float)
    M, N = A.shape
    if M + N > max_dim:
        raise OracleTooLarge(f"oracle capped at rows + cols <= {max_dim}, got {M + N}")
    w = np.ones(N) if weights is None else np.asarray(weights, dtype=float)
    if not np.any(y):
        return np.zeros(N)

    # reduce to an independent row set
    U, sv, _ = np.linalg.svd(A, full_matrices=False)
    r = int(np.sum(sv > 1e-12 * max(1.0, sv.max())))
    if r == 0:
        raise ValueError("A is zero but y is not; infeasible")
    Ar = U[:, :r].T @ A
    yr = U[:, :r].T @ y
    if np.linalg.norm(U[:, :r] @ yr - y) > 1e-9 * max(1.0, np.linalg.norm(y)):
        raise ValueError("y is not in the range of A; infeasible")
    if math.comb(N, r) > max_bases:
        raise OracleTooLarge(f"C({N},{r}) bases exceeds the cap {max_bases}")

    best_obj = math.inf
    best = None
    cols = itertools.combinations(range(N), r)
    chunk = 20000
    while True:
        batch = np.array(list(itertools.islice(cols, chunk)), dtype=int)
        if batch.size == 0:
            break
        sub = np.transpose(Ar[:, batch], (1, 0, 2))  # (b, r, r)
        det = np.linalg.det(sub)
        scale = np.prod(np.linalg.norm(sub, axis=1), axis=1)
        ok = np.abs(det) > 1e-10 * np.maximum(scale, 1e-300)
        if not np.any(ok):
            continue
        sols = np.linalg.solve(sub[ok], np.broadcast_to(yr, (int(ok.sum()), r))[..., None])[..., 0]
        objs = np.sum(w[batch[ok]] * np.abs(sols), axis=1)
        j = int(np.argmin(objs))
        if objs[j] < best_obj:
            best_obj = float(objs[j])
            best = np.zeros(N)
            best[batch[ok][j]] = sols[j]
    if best is None:
        raise ValueError("no nonsingular basis found")
    return best
