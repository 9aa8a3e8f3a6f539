"""Compare numba and numpy kernels on the column-determinant action.

    python benchmarks/bench_kernels.py [--sizes 4,6,8] [--columns 64]
"""
import argparse
import json

from capelli.bench import run_bench

if __name__ == "__main__":
    ap = argparse.ArgumentParser()
    ap.add_argument("--sizes", default="4,6,8")
    ap.add_argument("--columns", type=int, default=64)
    ap.add_argument("--repeats", type=int, default=3)
    a = ap.parse_args()
    for row in run_bench([int(s) for s in a.sizes.split(",")], a.repeats, a.columns):
        print(json.dumps(row, sort_keys=True))
