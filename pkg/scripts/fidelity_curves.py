"""Mean fidelity against N for adaptive and random references.

    python3 scripts/fidelity_curves.py --trials 10000 --out results/curves

Writes comparison.csv through the CLI and prints the adaptive gain per N.
"""

import argparse
import csv
from pathlib import Path

from symest.cli import main


def parse_args():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--trials", type=int, default=10_000)
    p.add_argument("--n-max", type=int, default=20)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--out", default="results/curves")
    return p.parse_args()


if __name__ == "__main__":
    args = parse_args()
    try:
        main(["compare", "--trials", str(args.trials), "--n-max", str(args.n_max), "--seed", str(args.seed), "--out", args.out])
    except SystemExit as exc:
        if exc.code:
            raise
    with open(Path(args.out) / "comparison.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    print(f"{'N':>3} {'adaptive':>9} {'random':>9} {'gain':>8} {'bound':>7}")
    for r in rows:
        a, b = float(r["adaptive_mean"]), float(r["random_mean"])
        print(f"{int(r['N']):>3} {a:9.4f} {b:9.4f} {a - b:+8.4f} {float(r['optimal_bound']):7.4f}")
