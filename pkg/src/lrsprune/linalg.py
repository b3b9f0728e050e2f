"""Dense linear algebra kernels shared by the decomposition and pruning stages.

All matrices are float64, C-order, finite. ``as_matrix`` is the single
validation choke point; every public op routes its inputs through it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class SvdError(Exception):
    """The SVD backend failed to produce a factorization."""


def as_matrix(a) -> np.ndarray:
    """Coerce ``a`` to a 2-D float64 C-order array with finite entries."""
    m = np.ascontiguousarray(a, dtype=np.float64)
    if m.ndim != 2:
        raise ValueError(f"expected a 2-D matrix, got ndim={m.ndim}")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix entries must be finite")
    return m


@dataclass
class SvdFactorization:
    """Thin SVD ``a = u @ diag(sigma) @ v.T`` with sigma non-negative, descending."""

    u: np.ndarray  # (m, r)
    sigma: np.ndarray  # (r,)
    v: np.ndarray  # (n, r)

    @property
    def rank(self) -> int:
        return int(self.sigma.size)


def svd(a) -> SvdFactorization:
    """Full thin SVD with a fixed sign convention.

    The largest-magnitude entry of every left singular vector is made
    positive (ties resolved to the lowest row index), so repeated calls on
    bit-identical input return bit-identical factors.

    Raises:
        SvdError: if the backend does not converge.
    """
    m = as_matrix(a)
    try:
        u, sigma, vh = np.linalg.svd(m, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise SvdError(f"svd of shape {m.shape} did not converge: {exc}") from exc
    v = vh.T
    anchor = np.argmax(np.abs(u), axis=0)
    signs = np.sign(u[anchor, np.arange(u.shape[1])])
    signs[signs == 0.0] = 1.0
    return SvdFactorization(
        u=np.ascontiguousarray(u * signs),
        sigma=np.ascontiguousarray(sigma),
        v=np.ascontiguousarray(v * signs),
    )


def frobenius_norm(a) -> float:
    return float(np.linalg.norm(as_matrix(a)))


def l1_norm(a) -> float:
    """Entrywise sum of absolute values (not the induced 1-norm)."""
    return float(np.abs(as_matrix(a)).sum())


def nuclear_norm(a) -> float:
    """Sum of singular values."""
    return float(svd(a).sigma.sum())


def matmul(a, b) -> np.ndarray:
    """Dense product with an explicit inner-dimension check."""
    a = as_matrix(a)
    b = as_matrix(b)
    if a.shape[1] != b.shape[0]:
        raise ValueError(f"inner dimensions differ: {a.shape} @ {b.shape}")
    return a @ b


def spectral_norm(a, tol: float = 1e-10, max_iters: int = 10_000) -> float:
    """Largest singular value via power iteration on the Gram matrix.

    Deterministic: starts from the all-ones vector and iterates the smaller
    Gram side until successive estimates agree to a relative ``tol``. A zero
    matrix returns 0.
    """
    m = as_matrix(a)
    if m.size == 0 or not m.any():
        return 0.0
    if m.shape[0] < m.shape[1]:
        m = m.T
    g = m.T @ m
    x = np.full(g.shape[0], 1.0 / np.sqrt(g.shape[0]))
    est = 0.0
    for _ in range(max_iters):
        y = g @ x
        norm_y = float(np.linalg.norm(y))
        if norm_y == 0.0:
            return 0.0
        x = y / norm_y
        if abs(norm_y - est) <= tol * norm_y:
            est = norm_y
            break
        est = norm_y
    return float(np.sqrt(est))
