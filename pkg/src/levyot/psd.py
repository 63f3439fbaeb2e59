"""Optimal coupling of diffusion matrices.

The squared Bures–Wasserstein distance here carries a factor 1/2, matching
the quadratic cost ``0.5 |x - y|^2`` used throughout the package::

    W_S(a, b)^2 = 0.5 * tr[a + b - 2 (a^1/2 b a^1/2)^1/2]
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import TOL_PSD, DimensionError, as_psd

TOL_NUM = 1e-8


class EigenSolverError(RuntimeError):
    pass


def _eigh(a):
    try:
        return np.linalg.eigh(0.5 * (a + a.T))
    except np.linalg.LinAlgError as exc:
        raise EigenSolverError(str(exc)) from exc


def psd_sqrt(a):
    """Symmetric PSD square root, negative eigenvalues clamped to zero."""
    lam, u = _eigh(np.asarray(a, dtype=float))
    root = (u * np.sqrt(np.clip(lam, 0.0, None))) @ u.T
    return 0.5 * (root + root.T)


def _pair(alpha, beta):
    a = as_psd(alpha, name="alpha")
    b = as_psd(beta, name="beta")
    if a.shape != b.shape:
        raise DimensionError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return a, b


def _swap_needed(a, b):
    # Fixed order on the pair so that (a, b) and (b, a) run the same arithmetic.
    return a.tobytes() > b.tobytes()


def _sqrt_trace(a, b):
    # tr (a^1/2 b a^1/2)^1/2 is the nuclear norm of b^1/2 a^1/2; singular values
    # avoid taking square roots of tiny, noisy eigenvalues a second time
    try:
        s = np.linalg.svd(psd_sqrt(b) @ psd_sqrt(a), compute_uv=False)
    except np.linalg.LinAlgError as exc:
        raise EigenSolverError(str(exc)) from exc
    return float(np.sum(s))


def bures_wasserstein_sq(alpha, beta):
    a, b = _pair(alpha, beta)
    if _swap_needed(a, b):
        a, b = b, a
    val = 0.5 * (np.trace(a) + np.trace(b) - 2.0 * _sqrt_trace(a, b))
    return max(float(val), 0.0)


@dataclass(frozen=True)
class DiffusionCouplingResult:
    cost: float
    cross_block: np.ndarray
    joint: np.ndarray


def optimal_cross_block(alpha, beta):
    """Maximise ``tr K`` subject to ``[[alpha, K], [K^T, beta]] >= 0``.

    With ``beta^1/2 alpha^1/2 = W S Z^T`` (SVD), the maximiser is
    ``K = alpha^1/2 Z W^T beta^1/2``: the middle factor is orthogonal, so the
    joint matrix is a Gram matrix and feasible by construction, and
    ``tr K`` equals the nuclear norm ``tr (alpha^1/2 beta alpha^1/2)^1/2``.
    This needs no inverse, so singular inputs are handled directly; for
    singular pairs only the cost is certified, not uniqueness of K.
    """
    a, b = _pair(alpha, beta)
    ra, rb = psd_sqrt(a), psd_sqrt(b)
    try:
        w, s, zt = np.linalg.svd(rb @ ra)
    except np.linalg.LinAlgError as exc:
        raise EigenSolverError(str(exc)) from exc
    k = ra @ zt.T @ w.T @ rb
    d = a.shape[0]
    joint = np.empty((2 * d, 2 * d))
    joint[:d, :d] = a
    joint[d:, d:] = b
    joint[:d, d:] = k
    joint[d:, :d] = k.T
    cost = max(0.5 * float(np.trace(a) + np.trace(b) - 2.0 * np.trace(k)), 0.0)
    return DiffusionCouplingResult(cost, k, joint)


@dataclass(frozen=True)
class DualMatrixPair:
    """Quadratic potentials ``x^T A x`` and ``y^T B y``.

    A and B are symmetric but not sign-definite in general: B is negative
    wherever the optimal map contracts.
    """

    A: np.ndarray
    B: np.ndarray
    value: float
    constraint_violation: float
    shrink: float = 1.0


def dual_constraint_violation(A, B):
    """Largest eigenvalue of ``[[A, 0], [0, B]] - 0.5 [[I, -I], [-I, I]]`` (<= 0 when feasible)."""
    d = A.shape[0]
    eye = np.eye(d)
    m = np.block([[A - 0.5 * eye, 0.5 * eye], [0.5 * eye, B - 0.5 * eye]])
    return float(_eigh(m)[0][-1])


def dual_matrix_certificate(alpha, beta, eps=None, tol_psd=TOL_PSD):
    """Feasible dual pair whose value ``tr(alpha A + beta B)`` approaches W_S^2.

    Built from the optimal map ``T`` between the regularised matrices
    ``alpha + eps I`` and ``beta + eps I`` as ``A = (I - T)/2``,
    ``B = (I - T^-1)/2``. If rounding leaves the pair slightly infeasible it
    is shrunk toward the feasible point ``(0, 0)``.
    """
    a, b = _pair(alpha, beta)
    d = a.shape[0]
    if eps is None:
        eps = 1e-10 * (1.0 + np.trace(a) + np.trace(b))
    if eps <= 0:
        raise ValueError("eps must be positive")
    eye = np.eye(d)
    ae, be = a + eps * eye, b + eps * eye
    lam, u = _eigh(ae)
    ra = (u * np.sqrt(lam)) @ u.T
    ra_inv = (u / np.sqrt(lam)) @ u.T
    m = psd_sqrt(ra @ be @ ra)
    t = ra_inv @ m @ ra_inv
    t_inv = ra @ np.linalg.pinv(m, hermitian=True) @ ra
    A = 0.5 * (eye - t)
    B = 0.5 * (eye - t_inv)
    A, B = 0.5 * (A + A.T), 0.5 * (B + B.T)

    viol = dual_constraint_violation(A, B)
    s = 1.0
    if viol > tol_psd:
        lo, hi = 0.0, 1.0
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            if dual_constraint_violation(mid * A, mid * B) <= tol_psd:
                lo = mid
            else:
                hi = mid
        s = lo
        A, B = s * A, s * B
        viol = dual_constraint_violation(A, B)
    value = float(np.trace(a @ A) + np.trace(b @ B))
    return DualMatrixPair(A, B, value, viol, s)
