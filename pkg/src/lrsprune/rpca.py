"""Robust decomposition of a dense matrix into low-rank plus sparse parts.

The solver is an inexact augmented Lagrangian ADMM. With a growing penalty
mu and a running multiplier Y it alternates

    L <- SVT_{1/mu}(W - S + Y/mu)          singular value thresholding
    S <- soft_{lambda/mu}(W - L + Y/mu)    entrywise soft thresholding
    Y <- Y + mu (W - L - S)

and stops once the relative feasibility residual
``||W - L - S||_F / ||W||_F`` drops to the configured tolerance.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linalg import as_matrix, frobenius_norm, spectral_norm, svd

MU_CAP_FACTOR = 1e7  # penalty stops growing at MU_CAP_FACTOR * mu_init
RANK_CUTOFF = 1e-9  # rank_l counts singular values above RANK_CUTOFF * sigma_1


class NonConvergenceError(Exception):
    """The ADMM loop hit the iteration cap above tolerance."""

    def __init__(self, iterations: int, residual: float, tol: float):
        self.iterations = iterations
        self.residual = residual
        self.tol = tol
        super().__init__(
            f"no convergence after {iterations} iterations: relative residual "
            f"{residual:.3e} exceeds tol {tol:.3e}"
        )


@dataclass
class RpcaConfig:
    """Solver knobs. ``lam=None`` and ``mu_init=None`` select the defaults
    1/sqrt(max(m, n)) and 1.25/spectral_norm(W)."""

    lam: float | None = None
    mu_init: float | None = None
    rho: float = 1.5
    tol: float = 1e-7
    max_iters: int = 500

    def __post_init__(self):
        if self.lam is not None and not self.lam > 0:
            raise ValueError("lam must be positive")
        if self.mu_init is not None and not self.mu_init > 0:
            raise ValueError("mu_init must be positive")
        if not self.rho > 1:
            raise ValueError("rho must exceed 1")
        if not 0 < self.tol < 1:
            raise ValueError("tol must lie in (0, 1)")
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")


@dataclass
class RpcaResult:
    l: np.ndarray
    s: np.ndarray
    y: np.ndarray  # final dual multiplier
    iterations: int
    residual: float  # final relative feasibility residual
    residual_history: list[float]
    rank_l: int
    sparsity_s: float  # fraction of exactly-zero entries in s


def default_lambda(rows: int, cols: int) -> float:
    """Sparsity weight 1 / sqrt(max(rows, cols))."""
    if rows < 1 or cols < 1:
        raise ValueError("matrix dimensions must be positive")
    return 1.0 / float(np.sqrt(max(rows, cols)))


def svt_shrink(sigma, tau: float) -> np.ndarray:
    """max(sigma - tau, 0) on each singular value."""
    return np.maximum(np.asarray(sigma, dtype=np.float64) - tau, 0.0)


def soft_threshold(x, tau: float) -> np.ndarray:
    """sign(x) * max(|x| - tau, 0), entrywise."""
    x = np.asarray(x, dtype=np.float64)
    return np.sign(x) * np.maximum(np.abs(x) - tau, 0.0)


def update_l(w, s, y, mu: float) -> np.ndarray:
    """Low-rank step: SVT with threshold 1/mu applied to ``w - s + y/mu``."""
    f = svd(w - s + y / mu)
    shrunk = svt_shrink(f.sigma, 1.0 / mu)
    return (f.u * shrunk) @ f.v.T


def update_s(w, l, y, mu: float, lam: float) -> np.ndarray:
    """Sparse step: soft threshold lambda/mu applied to ``w - l + y/mu``."""
    return soft_threshold(w - l + y / mu, lam / mu)


def decompose(w, config: RpcaConfig | None = None) -> RpcaResult:
    """Split ``w`` into a low-rank ``l`` plus an entrywise-sparse ``s``.

    Args:
        w: dense real matrix.
        config: solver knobs; defaults are used when omitted.

    Returns:
        RpcaResult with the two parts, the per-iteration relative residual
        history, and diagnostics (rank of l, zero fraction of s).

    Raises:
        NonConvergenceError: the residual stayed above ``config.tol`` for
            ``config.max_iters`` iterations.
    """
    w = as_matrix(w)
    config = config if config is not None else RpcaConfig()
    rows, cols = w.shape
    lam = config.lam if config.lam is not None else default_lambda(rows, cols)

    scale = max(frobenius_norm(w), 1e-12)
    w_top = spectral_norm(w)
    if w_top == 0.0:
        zero = np.zeros_like(w)
        return RpcaResult(
            l=zero,
            s=zero.copy(),
            y=zero.copy(),
            iterations=0,
            residual=0.0,
            residual_history=[],
            rank_l=0,
            sparsity_s=1.0,
        )

    mu = config.mu_init if config.mu_init is not None else 1.25 / w_top
    mu_cap = MU_CAP_FACTOR * mu
    # dual-feasible start for the multiplier
    y = w / max(w_top, float(np.abs(w).max()) / lam)
    l = np.zeros_like(w)
    s = np.zeros_like(w)

    history: list[float] = []
    residual = float("inf")
    iterations = config.max_iters
    for k in range(1, config.max_iters + 1):
        l = update_l(w, s, y, mu)
        s = update_s(w, l, y, mu, lam)
        gap = w - l - s
        y = y + mu * gap
        mu = min(config.rho * mu, mu_cap)
        residual = frobenius_norm(gap) / scale
        history.append(residual)
        if residual <= config.tol:
            iterations = k
            break
    else:
        raise NonConvergenceError(config.max_iters, residual, config.tol)

    sig = svd(l).sigma
    rank_l = int(np.count_nonzero(sig > RANK_CUTOFF * sig[0])) if sig.size and sig[0] > 0 else 0
    return RpcaResult(
        l=l,
        s=s,
        y=y,
        iterations=iterations,
        residual=residual,
        residual_history=history,
        rank_l=rank_l,
        sparsity_s=float(np.mean(s == 0.0)),
    )
