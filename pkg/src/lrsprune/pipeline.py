"""End-to-end two-stage compression of a toy multilayer model.

Stage 1 splits every selected layer into low-rank plus sparse parts and
enumerates the prunable candidates. Stage 2 learns retention probabilities
for all candidates jointly under one global parameter budget
``K = floor(budget_fraction * dense parameter count)``, then freezes a hard
top-probability selection and factorizes the survivors.

A sequential mode optimizes layers one at a time instead, each against its
own pro-rata budget with the earlier layers already compressed.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .allocator import (
    PROB_CLIP,
    MaskSample,
    PolicyGradientConfig,
    finalize_masks,
    init_state,
    reinforce_step,
)
from .calibration import (
    CalibrationSet,
    CompressedLayer,
    ToyModel,
    _forward,
    default_toy_model,
    factorize,
    forward_loss,
    gen_calibration,
    loss_with_masks,
    reconstruct,
)
from .pool import CandidatePool, build_pool, param_count
from .rpca import RpcaConfig, decompose

MODES = ("global", "sequential")
COMPONENT_CHOICES = ("both", "low_rank_only", "sparse_only")


@dataclass
class CompressionJob:
    model: ToyModel
    calib: CalibrationSet
    rpca_config: RpcaConfig = field(default_factory=RpcaConfig)
    pg_config: PolicyGradientConfig = field(default_factory=PolicyGradientConfig)
    budget_fraction: float = 0.5
    layer_selection: list[int] | None = None  # None selects every layer
    mode: str = "global"
    initial_prob: float = 0.5

    def __post_init__(self):
        if not 0.0 < self.budget_fraction <= 1.0:
            raise ValueError("budget_fraction must lie in (0, 1]")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        if not 0.0 <= self.initial_prob <= 1.0:
            raise ValueError("initial_prob must lie in [0, 1]")
        if self.layer_selection is not None:
            sel = list(self.layer_selection)
            if len(set(sel)) != len(sel) or sorted(sel) != sel:
                raise ValueError("layer_selection must be sorted and unique")
            for i in sel:
                if not 0 <= i < len(self.model.layers):
                    raise ValueError(f"layer index {i} out of range")
            self.layer_selection = sel


@dataclass
class LayerSummary:
    layer_id: int
    rows: int
    cols: int
    rank_l: int  # decomposition rank before pruning
    nnz_s: int  # sparse-part nonzeros before pruning
    sparsity_s: float
    retained_rank: int
    sparse_nnz: int  # sparse entries kept by the final mask
    cost: int  # stored parameters of the final mask


@dataclass
class CompressionReport:
    layers: list[LayerSummary]
    budget: int
    used_cost: int
    dense_loss: float
    rpca_loss: float
    final_loss: float
    rank_distribution: list[int]
    history: list[float]  # every loss evaluated during mask learning
    budget_too_small: bool = False
    mode: str = "global"


@dataclass
class SweepRow:
    lam: float | None  # None = per-layer default weight
    mean_rank_l: float
    mean_sparsity_s: float
    total_nnz_s: int
    final_loss: float


def _selected(job: CompressionJob) -> list[int]:
    if job.layer_selection is None:
        return list(range(len(job.model.layers)))
    return job.layer_selection


def _stage1(job: CompressionJob):
    order = _selected(job)
    results = {i: decompose(job.model.layers[i], job.rpca_config) for i in order}
    pools = {i: build_pool(i, results[i].l, results[i].s) for i in order}
    return order, results, pools


class _MaskedLossEvaluator:
    """Task loss of a concatenated mask.

    Caches the rebuilt weight per layer and only re-reconstructs layers
    whose mask bits changed; values are identical to a full rebuild.
    """

    def __init__(self, model, calib, pools, order):
        self.activation = model.activation
        self.calib = calib
        self.pools = pools
        self.weights = list(model.layers)
        self.slices: dict[int, slice] = {}
        off = 0
        for i in order:
            self.slices[i] = slice(off, off + pools[i].size)
            off += pools[i].size
        self.size = off
        self._keys = {i: None for i in order}

    def loss(self, bits: np.ndarray) -> float:
        for i, sl in self.slices.items():
            sub = bits[sl]
            key = sub.tobytes()
            if key != self._keys[i]:
                self.weights[i] = reconstruct(self.pools[i], sub)
                self._keys[i] = key
        diff = _forward(self.weights, self.activation, self.calib.inputs) - self.calib.targets
        return float(np.mean(np.sum(diff * diff, axis=1)))


def _learn_masks(evaluator, costs, budget, pg, rng, initial_prob, history):
    """Shared optimization loop: sample, score, reinforce, finalize."""
    state = init_state(costs, budget, initial_prob)
    n = costs.size
    steps = pg.iterations * evaluator.calib.size
    for _ in range(steps):
        p = np.clip(state.probs, PROB_CLIP, 1.0 - PROB_CLIP)
        samples = []
        for _ in range(pg.samples_per_step):
            bits = (rng.random(n) < p).astype(np.int8)
            loss = evaluator.loss(bits)
            history.append(loss)
            samples.append(MaskSample(bits=bits, loss=loss))
        reinforce_step(state, samples, pg)
    return finalize_masks(state)


def _allocate_global(job, pools, order, budget, rng, history):
    costs = (
        np.concatenate([pools[i].costs() for i in order])
        if order
        else np.zeros(0, dtype=np.float64)
    )
    if costs.size == 0 or budget < float(costs.min()):
        masks = {i: np.zeros(pools[i].size, dtype=np.int8) for i in order}
        return masks, costs.size > 0
    evaluator = _MaskedLossEvaluator(job.model, job.calib, pools, order)
    final = _learn_masks(evaluator, costs, budget, job.pg_config, rng, job.initial_prob, history)
    masks = {i: final[evaluator.slices[i]].copy() for i in order}
    return masks, False


def _allocate_sequential(job, pools, order, rng, history):
    weights = list(job.model.layers)
    masks: dict[int, np.ndarray] = {}
    too_small = False
    for i in order:
        pool = pools[i]
        layer_budget = int(np.floor(job.budget_fraction * job.model.layers[i].size))
        costs = pool.costs()
        if costs.size == 0 or layer_budget < float(costs.min()):
            masks[i] = np.zeros(pool.size, dtype=np.int8)
            too_small = too_small or costs.size > 0
        else:
            stage_model = ToyModel(layers=list(weights), activation=job.model.activation)
            evaluator = _MaskedLossEvaluator(stage_model, job.calib, {i: pool}, [i])
            masks[i] = _learn_masks(
                evaluator, costs, layer_budget, job.pg_config, rng, job.initial_prob, history
            )
        weights[i] = reconstruct(pool, masks[i])
    return masks, too_small


def _make_report(job, order, results, pools, masks, budget, history, too_small) -> tuple:
    model, calib = job.model, job.calib
    dense_loss = forward_loss(model, calib)
    ones = {i: np.ones(pools[i].size, dtype=np.int8) for i in order}
    rpca_loss = loss_with_masks(model, pools, ones, calib)
    final_loss = loss_with_masks(model, pools, masks, calib)
    compressed = {i: factorize(pools[i], masks[i]) for i in order}

    layers = []
    for i in order:
        pool, res, lay = pools[i], results[i], compressed[i]
        layers.append(
            LayerSummary(
                layer_id=i,
                rows=pool.rows,
                cols=pool.cols,
                rank_l=res.rank_l,
                nnz_s=int(np.count_nonzero(res.s)),
                sparsity_s=res.sparsity_s,
                retained_rank=lay.retained_rank,
                sparse_nnz=int(np.count_nonzero(lay.s_masked)),
                cost=param_count(pool, masks[i]),
            )
        )
    report = CompressionReport(
        layers=layers,
        budget=budget,
        used_cost=sum(ls.cost for ls in layers),
        dense_loss=dense_loss,
        rpca_loss=rpca_loss,
        final_loss=final_loss,
        rank_distribution=[ls.retained_rank for ls in layers],
        history=history,
        budget_too_small=too_small,
        mode=job.mode,
    )
    return report, compressed


def run(job: CompressionJob):
    """Compress the job's model.

    Returns:
        (CompressionReport, dict layer index -> CompressedLayer)
    """
    order, results, pools = _stage1(job)
    rng = np.random.default_rng(job.pg_config.seed)
    history: list[float] = []
    if job.mode == "global":
        dense_total = sum(job.model.layers[i].size for i in order)
        budget = int(np.floor(job.budget_fraction * dense_total))
        masks, too_small = _allocate_global(job, pools, order, budget, rng, history)
    else:
        masks, too_small = _allocate_sequential(job, pools, order, rng, history)
        budget = sum(
            int(np.floor(job.budget_fraction * job.model.layers[i].size)) for i in order
        )
    return _make_report(job, order, results, pools, masks, budget, history, too_small)


def heuristic_threshold_baseline(job: CompressionJob, components: str = "both"):
    """Magnitude-ranked hard selection at the same budget, no learning.

    Candidates are visited by descending magnitude (singular value for
    triplets, absolute value for sparse entries) under the same greedy cost
    accounting as the learned selection. ``components`` restricts
    eligibility to one candidate family: "both", "low_rank_only" or
    "sparse_only".
    """
    if components not in COMPONENT_CHOICES:
        raise ValueError(f"components must be one of {COMPONENT_CHOICES}")
    order, results, pools = _stage1(job)
    dense_total = sum(job.model.layers[i].size for i in order)
    budget = int(np.floor(job.budget_fraction * dense_total))

    mags, costs, eligible, slices = [], [], [], {}
    off = 0
    for i in order:
        pool = pools[i]
        for c in pool.candidates:
            mags.append(c.magnitude)
            costs.append(float(c.cost))
            if components == "low_rank_only":
                eligible.append(c.kind.value == "singular_triplet")
            elif components == "sparse_only":
                eligible.append(c.kind.value == "sparse_entry")
            else:
                eligible.append(True)
        slices[i] = slice(off, off + pool.size)
        off += pool.size

    mask = np.zeros(off, dtype=np.int8)
    remaining = float(budget)
    for k in np.argsort(-np.asarray(mags), kind="stable"):
        if eligible[k] and costs[k] <= remaining:
            mask[k] = 1
            remaining -= costs[k]
    masks = {i: mask[slices[i]].copy() for i in order}
    return _make_report(job, order, results, pools, masks, budget, [], False)


def sweep_lambda(job: CompressionJob, lambdas) -> list[SweepRow]:
    """Full compression run per sparsity weight; None selects the default.

    Each row aggregates the Stage 1 diagnostics over the selected layers
    and carries the post-selection task loss.
    """
    lambdas = list(lambdas)
    if not lambdas:
        raise ValueError("need at least one sparsity weight")
    rows = []
    for lam in lambdas:
        cfg = replace(job.rpca_config, lam=lam)
        report, _ = run(replace(job, rpca_config=cfg))
        rows.append(
            SweepRow(
                lam=lam,
                mean_rank_l=float(np.mean([ls.rank_l for ls in report.layers])),
                mean_sparsity_s=float(np.mean([ls.sparsity_s for ls in report.layers])),
                total_nnz_s=int(sum(ls.nnz_s for ls in report.layers)),
                final_loss=report.final_loss,
            )
        )
    return rows


def default_job(
    model_seed: int = 0,
    pg_seed: int = 0,
    budget_fraction: float = 0.5,
    calib_n: int = 128,
    calib_noise: float = 0.0,
    mode: str = "global",
    rpca_config: RpcaConfig | None = None,
    pg_config: PolicyGradientConfig | None = None,
) -> CompressionJob:
    """Planted three-layer job with the stock defaults."""
    rng = np.random.default_rng(model_seed)
    model = default_toy_model(rng)
    calib = gen_calibration(model, calib_n, calib_noise, rng)
    return CompressionJob(
        model=model,
        calib=calib,
        rpca_config=rpca_config if rpca_config is not None else RpcaConfig(),
        pg_config=pg_config if pg_config is not None else PolicyGradientConfig(seed=pg_seed),
        budget_fraction=budget_fraction,
        mode=mode,
    )
