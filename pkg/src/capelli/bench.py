"""Timing of the column-determinant action with numba and with plain numpy kernels.

Sizes 4 and 8 use the built-in quaternion and octonion tables; 6 (no
division algebra exists there) uses a synthetic signed circulant matrix.
"""
from __future__ import annotations

import os
import time

import numpy as np

from . import kernels
from .action_engine import EngineStats, IdentityOperators, coldet_apply
from .division_algebra import load_builtin
from .graded import PRIMES, space_dim
from .nc_matrix import WeylMatrix, column_det, mat_mul, transpose_substitute
from .weyl_core import WeylAlgebra

BUILTIN_FOR_SIZE = {1: "real", 2: "complex-standard", 4: "quaternion-paper", 8: "octonion-standard"}


def synthetic_operators(n: int) -> IdentityOperators:
    """A B for the signed circulant A_ij = (-1)^[j<i] x_{(j-i) mod n + 1}."""
    alg = WeylAlgebra(n)
    a = WeylMatrix([[alg.x((j - i) % n + 1) * (-1 if j < i else 1) for j in range(n)]
                    for i in range(n)])
    b = transpose_substitute(a)
    return IdentityOperators(mat_mul(a, b), column_det(a), column_det(b))


def bench_operators(n: int) -> tuple[str, IdentityOperators]:
    from .capelli_verifier import identity_operators
    if n in BUILTIN_FOR_SIZE:
        name = BUILTIN_FOR_SIZE[n]
        return name, identity_operators(load_builtin(name))
    return f"synthetic-{n}", synthetic_operators(n)


def _timed(ops, deg, x, p, diag, disable: bool, repeats: int):
    old = os.environ.get(kernels.DISABLE_ENV)
    os.environ[kernels.DISABLE_ENV] = "1" if disable else "0"
    try:
        best = float("inf")
        for _ in range(repeats):
            stats = EngineStats()
            t0 = time.perf_counter()
            out = coldet_apply(ops, deg, x, p, diag, stats)[0]
            best = min(best, time.perf_counter() - t0)
        return out, best, stats
    finally:
        if old is None:
            del os.environ[kernels.DISABLE_ENV]
        else:
            os.environ[kernels.DISABLE_ENV] = old


def run_bench(sizes=(4, 6, 8), repeats: int = 3, columns: int = 64, seed: int = 0) -> list[dict]:
    out = []
    p = PRIMES[0]
    for n in sizes:
        name, ops = bench_operators(n)
        deg = n
        dim = space_dim(n, deg)
        k = min(columns, dim)
        x = np.random.default_rng([seed, n]).integers(0, p, size=(dim, k), dtype=np.int64)
        diag = [2 * (n // 2 - i) - (1 if i >= n // 2 else 0) for i in range(n)]
        ops.entries(deg)  # build operators outside the timed region
        row = dict(n=n, table=name, degree=deg, dim=dim, columns=k)
        results = {}
        for label, disable in (("numba", False), ("numpy", True)):
            if label == "numba" and not kernels.HAVE_NUMBA:
                continue
            if label == "numba":
                _timed(ops, deg, x[:, :1], p, diag, False, 1)  # compile
            res, secs, stats = _timed(ops, deg, x, p, diag, disable, repeats)
            results[label] = res
            row[f"{label}_seconds"] = round(secs, 4)
            row[f"{label}_layer_seconds"] = [round(s, 4) for s in stats.layer_seconds]
            row["peak_state_bytes"] = stats.peak_state_bytes
        if len(results) == 2:
            row["agree"] = bool(np.array_equal(results["numba"], results["numpy"]))
            row["speedup"] = round(row["numpy_seconds"] / max(row["numba_seconds"], 1e-9), 2)
        out.append(row)
    return out
