"""End-to-end orchestration: budgets, reports, modes, baselines, sweeps."""

import numpy as np
import pytest

from lrsprune.allocator import PolicyGradientConfig
from lrsprune.calibration import gen_calibration, planted_model
from lrsprune.oracle import brute_force_best_mask
from lrsprune.pipeline import (
    CompressionJob,
    default_job,
    heuristic_threshold_baseline,
    run,
    sweep_lambda,
)
from lrsprune.pool import build_pool
from lrsprune.rpca import RpcaConfig, decompose


@pytest.fixture(scope="module")
def quick_run():
    """Default planted job with a small calibration set, run once."""
    job = default_job(calib_n=32)
    report, compressed = run(job)
    return job, report, compressed


def single_layer_job(seed, budget_fraction, calib_n=256):
    """One 24x16 layer, one planted direction, seven graded outliers."""
    rng = np.random.default_rng(seed)
    model = planted_model(
        [(24, 16)], rng, ranks=[1], outlier_frac=7 / 384, outlier_scale=(6.0, 18.0)
    )
    calib = gen_calibration(model, calib_n, 0.0, rng)
    return CompressionJob(
        model=model,
        calib=calib,
        pg_config=PolicyGradientConfig(seed=seed),
        budget_fraction=budget_fraction,
    )


class TestJobValidation:
    def test_budget_fraction_bounds(self, quick_run):
        job = quick_run[0]
        with pytest.raises(ValueError):
            CompressionJob(model=job.model, calib=job.calib, budget_fraction=0.0)
        with pytest.raises(ValueError):
            CompressionJob(model=job.model, calib=job.calib, budget_fraction=1.5)

    def test_mode_and_selection_validated(self, quick_run):
        job = quick_run[0]
        with pytest.raises(ValueError):
            CompressionJob(model=job.model, calib=job.calib, mode="parallel")
        with pytest.raises(ValueError):
            CompressionJob(model=job.model, calib=job.calib, layer_selection=[1, 0])
        with pytest.raises(ValueError):
            CompressionJob(model=job.model, calib=job.calib, layer_selection=[0, 0])
        with pytest.raises(ValueError):
            CompressionJob(model=job.model, calib=job.calib, layer_selection=[3])


class TestRunReport:
    def test_budget_formula(self, quick_run):
        _, report, _ = quick_run
        assert report.budget == int(np.floor(0.5 * (32 * 24 + 24 * 24 + 24 * 16)))

    def test_budget_honored_and_costs_sum(self, quick_run):
        _, report, compressed = quick_run
        assert report.used_cost <= report.budget
        assert report.used_cost == sum(ls.cost for ls in report.layers)
        assert report.used_cost == sum(c.stored_params for c in compressed.values())

    def test_rank_distribution_mirrors_layers(self, quick_run):
        _, report, compressed = quick_run
        assert report.rank_distribution == [ls.retained_rank for ls in report.layers]
        assert report.rank_distribution == [
            compressed[i].retained_rank for i in sorted(compressed)
        ]

    def test_history_records_every_scored_sample(self, quick_run):
        job, report, _ = quick_run
        steps = job.pg_config.iterations * job.calib.size * job.pg_config.samples_per_step
        assert len(report.history) == steps
        assert all(np.isfinite(h) for h in report.history)

    def test_mode_and_flag_defaults(self, quick_run):
        _, report, _ = quick_run
        assert report.mode == "global"
        assert report.budget_too_small is False
        assert report.dense_loss == 0.0  # noiseless self-targets

    def test_deterministic_given_seeds(self):
        a, _ = run(default_job(calib_n=32))
        b, _ = run(default_job(calib_n=32))
        assert a.final_loss == b.final_loss
        assert a.history == b.history
        assert a.rank_distribution == b.rank_distribution
        assert a.used_cost == b.used_cost


class TestFullBudget:
    def test_everything_retained_matches_stage1(self):
        job = default_job(calib_n=32, budget_fraction=1.0)
        report, compressed = run(job)
        assert report.final_loss <= report.rpca_loss + 1e-9
        for layer in compressed.values():
            assert np.all(layer.mask == 1)

    def test_heuristic_identical_at_full_budget(self):
        job = default_job(calib_n=32, budget_fraction=1.0)
        learned, lc = run(job)
        baseline, bc = heuristic_threshold_baseline(job)
        assert baseline.final_loss == learned.final_loss
        assert baseline.used_cost == learned.used_cost
        for i in lc:
            np.testing.assert_array_equal(lc[i].mask, bc[i].mask)


class TestBudgetTooSmall:
    def test_triplet_only_pool_below_cheapest(self, rng):
        model = planted_model([(24, 16)], rng, ranks=[1], outlier_frac=0.0)
        calib = gen_calibration(model, 16, 0.0, rng)
        job = CompressionJob(model=model, calib=calib, budget_fraction=0.02)
        report, compressed = run(job)
        # budget 7 cannot afford the only candidate kind (cost 40)
        assert report.budget == 7
        assert report.budget_too_small is True
        assert report.used_cost == 0
        assert report.rank_distribution == [0]
        np.testing.assert_array_equal(compressed[0].mask, 0)
        expected = float(np.mean(np.sum(calib.targets**2, axis=1)))
        assert report.final_loss == pytest.approx(expected, rel=1e-12)


class TestSequentialMode:
    def test_per_layer_budgets(self):
        job = default_job(calib_n=32, mode="sequential")
        report, _ = run(job)
        assert report.mode == "sequential"
        per_layer = [int(np.floor(0.5 * (m * n))) for m, n in ((32, 24), (24, 24), (24, 16))]
        assert report.budget == sum(per_layer)
        for ls, cap in zip(report.layers, per_layer):
            assert ls.cost <= cap
        assert report.used_cost <= report.budget


class TestLayerSelection:
    def test_subset_only(self):
        job = default_job(calib_n=32)
        job = CompressionJob(
            model=job.model,
            calib=job.calib,
            pg_config=job.pg_config,
            budget_fraction=0.5,
            layer_selection=[0, 2],
        )
        report, compressed = run(job)
        assert sorted(compressed) == [0, 2]
        assert [ls.layer_id for ls in report.layers] == [0, 2]
        assert report.budget == int(np.floor(0.5 * (32 * 24 + 24 * 16)))


class TestNearOracle:
    def test_small_pool_close_to_brute_force(self):
        from lrsprune.calibration import loss_with_masks

        job = single_layer_job(0, budget_fraction=4 / 384)
        report, _ = run(job)
        res = decompose(job.model.layers[0], job.rpca_config)
        pool = build_pool(0, res.l, res.s)
        assert pool.size <= 12

        def loss_fn(bits):
            return loss_with_masks(job.model, {0: pool}, {0: bits}, job.calib)

        oracle = brute_force_best_mask(pool, report.budget, loss_fn)
        assert report.final_loss <= 1.05 * oracle.best_loss


class TestHeuristicBaseline:
    def test_component_restrictions(self):
        job = default_job(calib_n=32)
        l_only, _ = heuristic_threshold_baseline(job, components="low_rank_only")
        assert all(ls.sparse_nnz == 0 for ls in l_only.layers)
        s_only, _ = heuristic_threshold_baseline(job, components="sparse_only")
        assert all(ls.retained_rank == 0 for ls in s_only.layers)
        assert s_only.used_cost <= s_only.budget

    def test_rejects_unknown_components(self):
        job = default_job(calib_n=32)
        with pytest.raises(ValueError):
            heuristic_threshold_baseline(job, components="l")

    def test_deterministic(self):
        job = default_job(calib_n=32)
        a, _ = heuristic_threshold_baseline(job)
        b, _ = heuristic_threshold_baseline(job)
        assert a.final_loss == b.final_loss
        assert a.used_cost == b.used_cost


class TestSweepLambda:
    def test_default_weight_single_row_matches_run(self):
        job = default_job(calib_n=32)
        rows = sweep_lambda(job, [None])
        report, _ = run(job)
        assert len(rows) == 1
        assert rows[0].lam is None
        assert rows[0].final_loss == report.final_loss
        assert rows[0].mean_rank_l == pytest.approx(
            np.mean([ls.rank_l for ls in report.layers])
        )
        assert rows[0].total_nnz_s == sum(ls.nnz_s for ls in report.layers)

    def test_sparse_mass_shrinks_with_weight(self):
        job = default_job(calib_n=32)
        rows = sweep_lambda(job, [0.01, 0.1, 1.0])
        nnz = [r.total_nnz_s for r in rows]
        assert nnz == sorted(nnz, reverse=True)
        sparsity = [r.mean_sparsity_s for r in rows]
        assert sparsity == sorted(sparsity)

    def test_extreme_weight_forces_dense_low_rank(self):
        job = single_layer_job(0, budget_fraction=0.5, calib_n=32)
        auto_row = sweep_lambda(job, [None])[0]
        extreme_row = sweep_lambda(job, [10.0])[0]
        assert extreme_row.mean_sparsity_s >= 0.99
        assert extreme_row.mean_rank_l >= auto_row.mean_rank_l

    def test_empty_list_rejected(self):
        job = default_job(calib_n=32)
        with pytest.raises(ValueError):
            sweep_lambda(job, [])
