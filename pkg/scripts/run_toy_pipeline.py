#!/usr/bin/env python3
"""Run the two-stage pipeline on the planted three-layer toy model."""

from __future__ import annotations

import argparse

from lrsprune import default_job, run
from lrsprune.cli import format_report


def main() -> None:
    p = argparse.ArgumentParser(description="Compress the planted toy model")
    p.add_argument("--seed", type=int, default=0, help="model and calibration seed")
    p.add_argument("--pg-seed", type=int, default=None, help="mask sampler seed (default: --seed)")
    p.add_argument("--fraction", type=float, default=0.5, help="parameter budget fraction")
    p.add_argument("--calib-n", type=int, default=128, help="calibration records")
    p.add_argument("--noise", type=float, default=0.0, help="calibration target noise sigma")
    p.add_argument("--mode", choices=("global", "sequential"), default="global")
    args = p.parse_args()

    pg_seed = args.seed if args.pg_seed is None else args.pg_seed
    job = default_job(
        model_seed=args.seed,
        pg_seed=pg_seed,
        budget_fraction=args.fraction,
        calib_n=args.calib_n,
        calib_noise=args.noise,
        mode=args.mode,
    )
    report, _ = run(job)
    print(format_report(report), end="")


if __name__ == "__main__":
    main()
