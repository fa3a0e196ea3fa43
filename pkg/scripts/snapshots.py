"""Rotated-frame estimate and reference distributions at chosen steps.

    python3 scripts/snapshots.py --trials 10000 --steps 1,5,20

Prints per-step summaries (mean cos, fraction above 0.9, fitted exponential
rate of the estimate distribution) and, with --out, writes the CSV files.
"""

import argparse
import math

import numpy as np
from scipy import stats

from symest.harness import ExperimentConfig, exponential_tail_rate, simulate, snapshot_from_arrays


def parse_args():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--trials", type=int, default=10_000)
    p.add_argument("--steps", default="1,5,20")
    p.add_argument("--strategy", default="adaptive", choices=["adaptive", "random"])
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--out", default=None, help="also write CSVs via the CLI snapshot command")
    return p.parse_args()


if __name__ == "__main__":
    args = parse_args()
    steps = tuple(int(s) for s in args.steps.split(","))
    cfg = ExperimentConfig(n_max=max(steps), trials=args.trials, strategy=args.strategy,
                           master_seed=args.seed, snapshot_steps=steps)
    arrays = simulate(cfg)
    print(f"{'step':>4} {'est cos':>8} {'P(>0.9)':>8} {'rate':>6} {'ref cos':>8} {'ref SE':>7} {'ref KS p':>8}")
    for s in steps:
        snap = snapshot_from_arrays(arrays, s)
        rc = snap.reference_cos
        ks = stats.kstest(rc, stats.uniform(loc=-1, scale=2).cdf).pvalue
        print(
            f"{s:>4} {snap.estimate_cos.mean():8.4f} {np.mean(snap.estimate_cos > 0.9):8.4f} "
            f"{exponential_tail_rate(snap.estimate_cos):6.2f} {rc.mean():8.4f} "
            f"{rc.std(ddof=1) / math.sqrt(len(rc)):7.4f} {ks:8.3f}"
        )
    if args.out:
        from symest.cli import main

        try:
            main(["snapshot", "--trials", str(args.trials), "--n-max", str(max(steps)), "--strategy", args.strategy,
                  "--seed", str(args.seed), "--snapshot-steps", args.steps, "--out", args.out])
        except SystemExit as exc:
            if exc.code:
                raise
