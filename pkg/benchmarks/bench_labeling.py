#!/usr/bin/env python3
"""Benchmark the greedy-assignment kernels: compiled extension vs numpy fallback.

Times the full n x n matching on centered 2-D uniform data against a
standard-normal source, checks that both backends return identical
assignments, and prints a speedup table.

    python benchmarks/bench_labeling.py [--sizes 2000,5000,10000,20000] [--d 2] [--repeat 3]
"""

import argparse
import time

import numpy as np

from gtnlab.core import center, make_rng, sample_standard_normal
from gtnlab.kernels import _greedy_np, greedy_assign_cython
from gtnlab.labeling import COSINE_SCORE_RESOLUTION, unit_rows


def _timed(fn, *args, repeat):
    best = float("inf")
    result = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        result = fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best, result


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--sizes", default="2000,5000,10000,20000")
    parser.add_argument("--d", type=int, default=2)
    parser.add_argument("--repeat", type=int, default=3)
    parser.add_argument("--seed", type=int, default=7)
    args = parser.parse_args()

    sizes = [int(s) for s in args.sizes.split(",")]
    have_cython = greedy_assign_cython is not None
    if not have_cython:
        print("compiled kernel not built; timing the numpy fallback only\n")

    header = f"{'n':>8}  {'numpy [s]':>10}"
    if have_cython:
        header += f"  {'cython [s]':>10}  {'speedup':>8}"
    print(header)
    for n in sizes:
        rng = make_rng(args.seed)
        data, _ = center(rng.uniform(0.0, 1.0, size=(n, args.d)))
        source = sample_standard_normal(rng, n, args.d)
        x_unit = unit_rows(data[np.argsort(np.linalg.norm(data, axis=1), kind="stable")])
        y_unit = unit_rows(source[np.argsort(np.linalg.norm(source, axis=1), kind="stable")])

        t_np, a_np = _timed(
            _greedy_np.greedy_assign, x_unit, y_unit, COSINE_SCORE_RESOLUTION, repeat=args.repeat
        )
        line = f"{n:>8}  {t_np:>10.3f}"
        if have_cython:
            t_cy, a_cy = _timed(
                greedy_assign_cython, x_unit, y_unit, COSINE_SCORE_RESOLUTION, repeat=args.repeat
            )
            if not np.array_equal(a_np, a_cy):
                raise SystemExit(f"backend disagreement at n={n}")
            line += f"  {t_cy:>10.3f}  {t_np / t_cy:>7.1f}x"
        print(line)


if __name__ == "__main__":
    main()
