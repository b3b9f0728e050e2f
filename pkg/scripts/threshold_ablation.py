#!/usr/bin/env python3
"""Learned retention vs magnitude thresholds and single-family variants."""

from __future__ import annotations

import argparse

from lrsprune import default_job, heuristic_threshold_baseline, run


def main() -> None:
    p = argparse.ArgumentParser(description="Selection ablation on the toy model")
    p.add_argument("--fractions", default="0.25,0.5,0.75", help="comma list of budget fractions")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--calib-n", type=int, default=128)
    args = p.parse_args()

    print("fraction\tvariant\tfinal_loss\tused_cost")
    for token in args.fractions.split(","):
        fraction = float(token)
        job = default_job(model_seed=args.seed, pg_seed=args.seed,
                          budget_fraction=fraction, calib_n=args.calib_n)
        rows = [("learned", run(job)[0])]
        for variant in ("both", "low_rank_only", "sparse_only"):
            label = "threshold" if variant == "both" else variant
            rows.append((label, heuristic_threshold_baseline(job, variant)[0]))
        for label, report in rows:
            print(f"{fraction}\t{label}\t{report.final_loss:.6e}\t{report.used_cost}")


if __name__ == "__main__":
    main()
