#!/usr/bin/env python3
"""Benchmark the compiled string kernels against the pure-Python fallback.

Runs each kernel over the same randomized workload with both backends and
prints calls/second plus the speedup. Usage:

    python benchmarks/bench_kernels.py [--pairs N] [--repeat K]
"""

from __future__ import annotations

import argparse
import random
import string
import time

from entres import _kernels_py

try:
    from entres import _kernels
except ImportError:
    _kernels = None

ALPHABET = string.ascii_lowercase


def make_pairs(n: int, rng: random.Random) -> list[tuple[str, str]]:
    """Half near-duplicates (one edit apart), half unrelated strings, with
    lengths spread across the 3..24 range the resolvers typically see."""
    pairs = []
    for i in range(n):
        a = "".join(rng.choices(ALPHABET, k=rng.randint(3, 24)))
        if i % 2 == 0:
            b = list(a)
            pos = rng.randrange(len(b))
            b[pos] = rng.choice(ALPHABET)
            b = "".join(b)
        else:
            b = "".join(rng.choices(ALPHABET, k=rng.randint(3, 24)))
        pairs.append((a, b))
    return pairs


def bench(fn, pairs: list[tuple[str, str]], repeat: int) -> float:
    """Best wall-clock seconds for one sweep over the pairs."""
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        for a, b in pairs:
            fn(a, b)
        best = min(best, time.perf_counter() - t0)
    return best


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--pairs", type=int, default=20000)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=7)
    args = ap.parse_args()

    pairs = make_pairs(args.pairs, random.Random(args.seed))
    names = ("levenshtein", "lev_score", "jw_score")

    print(f"{args.pairs} pairs, best of {args.repeat} sweeps\n")
    header = f"{'kernel':<12} {'python':>12} {'compiled':>12} {'speedup':>9}"
    print(header)
    print("-" * len(header))
    for name in names:
        py = bench(getattr(_kernels_py, name), pairs, args.repeat)
        row = f"{name:<12} {args.pairs / py:>10.0f}/s"
        if _kernels is None:
            row += f" {'(missing)':>12} {'-':>9}"
        else:
            # both backends must agree before timing means anything
            cfn, pfn = getattr(_kernels, name), getattr(_kernels_py, name)
            for a, b in pairs[:500]:
                assert cfn(a, b) == pfn(a, b), (name, a, b)
            c = bench(cfn, pairs, args.repeat)
            row += f" {args.pairs / c:>10.0f}/s {py / c:>8.1f}x"
        print(row)

    if _kernels is None:
        print("\ncompiled extension not built; only the fallback was timed")


if __name__ == "__main__":
    main()
