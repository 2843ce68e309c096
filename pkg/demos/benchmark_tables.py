"""Small seeded versions of the pair and root-cause benchmarks.

Run with ``python3 demos/benchmark_tables.py --reps 20``. Set ``HNM_THREADS``
to use more worker processes.
"""

import argparse
import time

from hnmroot.benchmark import run_suite

parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
parser.add_argument("--reps", type=int, default=10)
parser.add_argument("--seed", type=int, default=0)
args = parser.parse_args()

# %%
start = time.perf_counter()
print(f"pair direction accuracy, {args.reps} pairs per cell, n = 1000")
for row in run_suite("pairs", args.reps, seed=args.seed):
    print(f"  {row.config:<28} {row.value:.2f}")
print(f"  ({time.perf_counter() - start:.0f} s)")

# %%
for p, n in [(10, 500), (10, 2000)]:
    start = time.perf_counter()
    rows = run_suite("rootcause", args.reps, p=p, n=n, seed=args.seed)
    means = {r.metric: r.value for r in rows if r.metric.startswith("mean_")}
    print(f"root causes p={p} n={n}: RBO {means['mean_rbo']:.3f}, MSE {means['mean_mse']:.3f} "
          f"(all rows: RBO {means['mean_rbo_all']:.3f}) "
          f"[{time.perf_counter() - start:.0f} s]")
