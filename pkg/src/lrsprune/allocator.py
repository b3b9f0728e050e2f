"""Budgeted Bernoulli retention learning.

Every candidate k carries a retention probability s_k. Binary masks are
sampled, each mask's task loss is scored against a moving baseline, and the
probabilities follow the score-function gradient

    d log p(m) / d s_k = (m_k - s_k) / (s_k (1 - s_k) + eps)

followed by Euclidean projection onto the cost-weighted budget polytope
{ s : sum_k c_k s_k <= K, 0 <= s_k <= 1 }. The final hard selection is a
deterministic greedy sweep in descending-probability order.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

PROB_CLIP = 1e-6  # sampling/gradient clearance from the hard 0/1 boundary
CONSTRAINT_TOL = 1e-10  # absolute bisection tolerance on the budget constraint


@dataclass
class PolicyGradientConfig:
    learning_rate: float = 0.05
    baseline_beta: float = 0.9
    epsilon: float = 1e-8
    iterations: int = 3  # outer passes over the calibration set
    window: int = 5  # recent losses averaged into the baseline signal
    samples_per_step: int = 1
    seed: int = 0

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be positive")
        if not 0.0 <= self.baseline_beta < 1.0:
            raise ValueError("baseline_beta must lie in [0, 1)")
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if self.iterations < 1:
            raise ValueError("iterations must be at least 1")
        if self.window < 1:
            raise ValueError("window must be at least 1")
        if self.samples_per_step < 1:
            raise ValueError("samples_per_step must be at least 1")


@dataclass
class RetentionState:
    probs: np.ndarray
    costs: np.ndarray
    budget: float
    baseline: float = 0.0
    step: int = 0
    recent_losses: list = field(default_factory=list, repr=False)

    @property
    def size(self) -> int:
        return int(self.probs.size)


@dataclass
class MaskSample:
    bits: np.ndarray
    loss: float


def init_state(pool_costs, budget, initial_prob: float = 0.5) -> RetentionState:
    """Uniform retention probabilities projected onto the budget."""
    costs = np.asarray(pool_costs, dtype=np.float64)
    if costs.ndim != 1:
        raise ValueError("costs must be a flat vector")
    if np.any(costs <= 0):
        raise ValueError("candidate costs must be positive")
    if not budget > 0:
        raise ValueError(f"budget must be positive, got {budget}")
    if not 0.0 <= initial_prob <= 1.0:
        raise ValueError("initial_prob must lie in [0, 1]")
    probs = project_to_budget(np.full(costs.shape, float(initial_prob)), costs, budget)
    return RetentionState(probs=probs, costs=costs, budget=float(budget))


def sample_mask(state: RetentionState, rng: np.random.Generator) -> np.ndarray:
    """Independent Bernoulli draw per candidate; p = 0 and p = 1 are exact."""
    return (rng.random(state.probs.size) < state.probs).astype(np.int8)


def log_prob_grad(mask, probs, epsilon: float) -> np.ndarray:
    """Gradient of log p(mask) in the retention probabilities."""
    mask = np.asarray(mask, dtype=np.float64)
    probs = np.asarray(probs, dtype=np.float64)
    return (mask - probs) / (probs * (1.0 - probs) + epsilon)


def reinforce_step(
    state: RetentionState, samples: list[MaskSample], config: PolicyGradientConfig
) -> RetentionState:
    """One update from a batch of scored masks.

    Per sample, in order: fold the loss into the moving baseline, then move
    every probability along the advantage-weighted score-function gradient.
    The batch ends with a projection back onto the budget polytope and a
    step-count increment. The state is updated in place and returned.
    """
    probs = np.asarray(state.probs, dtype=np.float64)
    for sample in samples:
        loss = float(sample.loss)
        state.recent_losses.append(loss)
        del state.recent_losses[: -config.window]
        signal = sum(state.recent_losses) / len(state.recent_losses)
        state.baseline = (
            config.baseline_beta * state.baseline + (1.0 - config.baseline_beta) * signal
        )
        advantage = loss - state.baseline
        safe = np.clip(probs, PROB_CLIP, 1.0 - PROB_CLIP)
        grad = log_prob_grad(sample.bits, safe, config.epsilon)
        probs = probs - config.learning_rate * advantage * grad
    state.probs = project_to_budget(probs, state.costs, state.budget)
    state.step += 1
    return state


def project_to_budget(probs, costs, budget) -> np.ndarray:
    """Euclidean projection onto { s : costs . s <= budget, 0 <= s <= 1 }.

    If clipping to the box alone is feasible it is returned directly.
    Otherwise the unique multiplier nu >= 0 with
    ``sum_k c_k clip(s_k - nu c_k, 0, 1) = budget`` is found by bisection to
    an absolute constraint tolerance of 1e-10.
    """
    s = np.asarray(probs, dtype=np.float64)
    c = np.asarray(costs, dtype=np.float64)
    if s.ndim != 1 or s.shape != c.shape:
        raise ValueError("probs and costs must be flat vectors of equal length")
    if np.any(c <= 0):
        raise ValueError("candidate costs must be positive")
    if budget < 0:
        raise ValueError(f"budget must be non-negative, got {budget}")
    budget = float(budget)

    clipped = np.clip(s, 0.0, 1.0)
    if float(c @ clipped) <= budget:
        return clipped

    def spend(nu: float) -> float:
        return float(c @ np.clip(s - nu * c, 0.0, 1.0))

    lo = 0.0
    hi = float(np.max(np.maximum(s, 1.0) / c))  # spend(hi) == 0 <= budget
    nu = hi
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        value = spend(mid)
        if abs(value - budget) <= CONSTRAINT_TOL:
            nu = mid
            break
        if value > budget:
            lo = mid
        else:
            hi = mid
    else:
        nu = hi  # feasible side of the final bracket
    return np.clip(s - nu * c, 0.0, 1.0)


def finalize_masks(state: RetentionState) -> np.ndarray:
    """Deterministic hard selection under the budget.

    Candidates are visited in descending-probability order (ties keep pool
    order) and retained whenever their cost still fits. The result always
    satisfies the hard budget.
    """
    order = np.argsort(-state.probs, kind="stable")
    mask = np.zeros(state.probs.size, dtype=np.int8)
    remaining = float(state.budget)
    for k in order:
        if state.costs[k] <= remaining:
            mask[k] = 1
            remaining -= float(state.costs[k])
    return mask


def exact_expected_loss_grad(probs, loss_fn) -> np.ndarray:
    """Exact gradient of E[loss(mask)] for independent Bernoulli bits.

    Enumerates all 2^n masks; n is capped at 16.
    """
    probs = np.asarray(probs, dtype=np.float64)
    n = int(probs.size)
    if n > 16:
        raise ValueError("exact enumeration is capped at 16 candidates")
    grad = np.zeros(n)
    for code in range(2**n):
        bits = np.fromiter(((code >> k) & 1 for k in range(n)), dtype=np.int8, count=n)
        weights = np.where(bits == 1, probs, 1.0 - probs)
        loss = float(loss_fn(bits))
        for k in range(n):
            others = float(np.prod(np.delete(weights, k)))
            grad[k] += loss * others * (1.0 if bits[k] else -1.0)
    return grad
