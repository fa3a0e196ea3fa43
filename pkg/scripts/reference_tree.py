"""Distinct adaptive references per step, enumerated over all outcome strings.

    python3 scripts/reference_tree.py --depth 6

The adaptive reference depends only on the outcomes seen so far, so step
k + 1 has at most 2^k possible references.
"""

import argparse
from itertools import product

from symest.likelihood import MeasurementSequence
from symest.strategy import StrategyKind, next_reference_adaptive

if __name__ == "__main__":
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--depth", type=int, default=6)
    args = p.parse_args()
    kind = StrategyKind.adaptive()
    cache = {"": MeasurementSequence()}
    for k in range(args.depth):
        refs = set()
        for outcomes in product("as", repeat=k):
            key = "".join(outcomes)
            hist = cache.get(key)
            if hist is None:
                parent = cache[key[:-1]]
                hist = cache[key] = parent.append(key[-1], next_reference_adaptive(parent, kind))
            refs.add(next_reference_adaptive(hist, kind))
        print(f"step {k + 1}: {len(refs)} distinct references (at most {2 ** k})")
