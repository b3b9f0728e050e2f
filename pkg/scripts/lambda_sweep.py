#!/usr/bin/env python3
"""Sweep the sparsity weight and tabulate rank, sparsity and final loss."""

from __future__ import annotations

import argparse

from lrsprune import default_job, sweep_lambda


def main() -> None:
    p = argparse.ArgumentParser(description="Stage 1 diagnostics per sparsity weight")
    p.add_argument(
        "--lambdas",
        default="0.001,0.01,auto,0.5,1.0",
        help="comma list of weights; 'auto' is the per-layer default",
    )
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--fraction", type=float, default=0.5)
    p.add_argument("--calib-n", type=int, default=128)
    args = p.parse_args()

    tokens = [t.strip() for t in args.lambdas.split(",") if t.strip()]
    lambdas = [None if t == "auto" else float(t) for t in tokens]
    job = default_job(model_seed=args.seed, pg_seed=args.seed,
                      budget_fraction=args.fraction, calib_n=args.calib_n)
    print("lambda\tmean_rank_l\tmean_sparsity_s\ttotal_nnz_s\tfinal_loss")
    for token, row in zip(tokens, sweep_lambda(job, lambdas)):
        print(f"{token}\t{row.mean_rank_l:.2f}\t{row.mean_sparsity_s:.4f}"
              f"\t{row.total_nnz_s}\t{row.final_loss:.6e}")


if __name__ == "__main__":
    main()
