"""Exhaustive references for small mask-selection problems.

Only practical for pools of a few dozen candidates at most; the pruning
pipeline never calls these, tests do.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .pool import CandidatePool

BRUTE_FORCE_CAP = 20
ENUMERATION_CAP = 16


def _costs_of(pool) -> np.ndarray:
    if isinstance(pool, CandidatePool):
        return pool.costs()
    if isinstance(pool, (list, tuple)) and pool and isinstance(pool[0], CandidatePool):
        return np.concatenate([p.costs() for p in pool])
    return np.asarray(pool, dtype=np.float64)


@dataclass
class OracleResult:
    best_mask: np.ndarray
    best_loss: float
    enumerated: int  # masks examined, 2**n
    feasible: int  # masks within budget, each scored


def brute_force_best_mask(pool, budget, loss_fn) -> OracleResult:
    """Lowest-loss mask within the budget by full enumeration.

    ``pool`` is a CandidatePool, a sequence of them (masks concatenate in
    sequence order), or a plain cost vector. Ties keep the first minimizer
    in enumeration order, which follows the candidate order bit by bit.
    """
    costs = _costs_of(pool)
    n = int(costs.size)
    if n > BRUTE_FORCE_CAP:
        raise ValueError(f"brute force is capped at {BRUTE_FORCE_CAP} candidates, got {n}")
    if budget < 0:
        raise ValueError("budget must be non-negative")

    best_mask = None
    best_loss = np.inf
    feasible = 0
    for code in range(2**n):
        bits = np.fromiter(((code >> k) & 1 for k in range(n)), dtype=np.int8, count=n)
        if float(costs @ bits) > budget:
            continue
        feasible += 1
        loss = float(loss_fn(bits))
        if loss < best_loss:
            best_loss = loss
            best_mask = bits
    if best_mask is None:
        # only possible when even the empty mask is infeasible, which it never is
        raise RuntimeError("no feasible mask enumerated")
    return OracleResult(best_mask=best_mask, best_loss=best_loss, enumerated=2**n, feasible=feasible)


def exact_expected_loss(probs, loss_fn) -> float:
    """E[loss(mask)] under independent Bernoulli bits, by full enumeration."""
    probs = np.asarray(probs, dtype=np.float64)
    n = int(probs.size)
    if n > ENUMERATION_CAP:
        raise ValueError(f"enumeration is capped at {ENUMERATION_CAP} candidates, got {n}")
    if np.any((probs < 0.0) | (probs > 1.0)):
        raise ValueError("probabilities must lie in [0, 1]")
    total = 0.0
    for code in range(2**n):
        bits = np.fromiter(((code >> k) & 1 for k in range(n)), dtype=np.int8, count=n)
        weight = float(np.prod(np.where(bits == 1, probs, 1.0 - probs)))
        if weight == 0.0:
            continue
        total += weight * float(loss_fn(bits))
    return total
