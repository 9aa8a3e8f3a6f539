"""Column-determinant identities decided through the graded action.

For a matrix M whose entries are degree-preserving Weyl operators (sums of
x_p D_q) plus diagonal shifts, the column-determinant C = cdet(M + diag)
preserves polynomial degree and has D-order at most n.  The same holds for
det(A) det(B).  Their difference vanishes iff it kills V_0, ..., V_n.

Two passes are used:

* ``residual_polynomial``: one random vector per degree, diagonal shifts
  kept as free parameters d_1..d_n (the result is multilinear in them).
  A candidate diagonal whose residual is nonzero mod p is refuted for good.
* ``verify_exact``: every basis vector of every V_m, a concrete diagonal,
  enough primes that the CRT modulus exceeds twice a proven bound.
"""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from math import comb, prod
from typing import Callable, Sequence

import numpy as np

from . import kernels
from .graded import (PRIMES, SparseOp, apply_chain, apply_chain_float, build_operator,
                     graded_space, space_dim, weyl_terms)
from .nc_matrix import WeylMatrix
from .weyl_core import WeylElement

log = logging.getLogger(__name__)


class BudgetExceeded(RuntimeError):
    """The memory cap cannot accommodate even a single work column."""


def popcount(v: int) -> int:
    return bin(v).count("1")


@dataclass
class EngineStats:
    spmm_calls: int = 0
    peak_state_bytes: int = 0
    layer_seconds: list[float] = field(default_factory=list)


class IdentityOperators:
    """Per-degree sparse matrices of the entries of M and of det(A), det(B)."""

    def __init__(self, m: WeylMatrix, det_a: WeylElement, det_b: WeylElement):
        self.matrix = m
        self.n = m.dim
        self.det_a = det_a
        self.det_b = det_b
        self._entries: dict[int, list[list[SparseOp | None]]] = {}
        self._lhs: dict[int, list[SparseOp]] = {}
        for row in m.rows:
            for w in row:
                for _, a, b in weyl_terms(w):
                    if sum(a) != sum(b) or sum(b) > 1:
                        raise ValueError(f"entry {w} is not a sum of x_p D_q terms")
        if any(sum(b) > self.n for _, _, b in weyl_terms(det_b)):
            raise ValueError("det(B) has D-order above n")

    def entries(self, deg: int) -> list[list[SparseOp | None]]:
        if deg not in self._entries:
            self._entries[deg] = [[build_operator(w, deg) if w.terms else None for w in row]
                                  for row in self.matrix.rows]
        return self._entries[deg]

    def lhs_ops(self, deg: int) -> list[SparseOp]:
        """[det_a, det_b] on V_deg (empty when det_b kills V_deg)."""
        if deg not in self._lhs:
            db = build_operator(self.det_b, deg)
            self._lhs[deg] = [] if db.nnz == 0 else [build_operator(self.det_a, db.dst), db]
        return self._lhs[deg]

    def degrees(self) -> range:
        return range(self.n + 1)



# -- column-determinant DP on vectors ---------------------------------------------------

def coldet_apply(ops: IdentityOperators, deg: int, x: np.ndarray, p: int,
                 diag: Sequence[int] | None, stats: EngineStats | None = None) -> dict[int, np.ndarray]:
    """cdet(M + diag) applied to the columns of ``x`` (entries of V_deg), mod p if p > 0.

    With ``diag=None`` the shifts are symbolic and the result maps a bitmask
    of columns (the monomial prod d_c) to its coefficient block.  With a
    concrete diagonal the only key is 0.
    """
    n = ops.n
    ent = ops.entries(deg)
    layer: dict[int, dict[int, np.ndarray]] = {0: {0: x % p if p else x}}
    for col in range(n - 1, -1, -1):
        t0 = time.perf_counter()
        nxt: dict[int, dict[int, np.ndarray]] = {}
        for used in sorted(layer):
            polys = layer[used]
            for r in range(n):
                bit = 1 << r
                if used & bit:
                    continue
                sign = -1 if popcount(used & (bit - 1)) & 1 else 1
                op = ent[r][col]
                shift = r == col and (diag is None or diag[col] != 0)
                if op is None and not shift:
                    continue
                target = nxt.setdefault(used | bit, {})
                for mask in sorted(polys):
                    arr = polys[mask]
                    if op is not None:
                        out = target.get(mask)
                        if out is None:
                            out = target[mask] = np.zeros_like(arr)
                        op.apply(arr, out, p, sign)
                        if stats is not None:
                            stats.spmm_calls += 1
                    if shift:
                        key = mask | bit if diag is None else mask
                        scale = sign if diag is None else sign * int(diag[col])
                        out = target.get(key)
                        if out is None:
                            out = target[key] = np.zeros_like(arr)
                        kernels.axpy_acc(arr, out, p, scale)
        layer = nxt
        if stats is not None:
            size = sum(a.nbytes for polys in layer.values() for a in polys.values())
            stats.peak_state_bytes = max(stats.peak_state_bytes, size)
            stats.layer_seconds.append(time.perf_counter() - t0)
    return layer.get((1 << n) - 1, {})


def lhs_apply(ops: IdentityOperators, deg: int, x: np.ndarray, p: int) -> np.ndarray:
    chain = ops.lhs_ops(deg)
    if not chain:
        return np.zeros_like(x)
    return apply_chain(chain, x % p if p else x, p)


# -- pass 1: symbolic diagonal, random vectors ---------------------------------------------

def residual_polynomial(ops: IdentityOperators, deg: int, p: int, seed: int,
                        vectors: int = 1, stats: EngineStats | None = None) -> dict[int, int]:
    """Projected residual w . (LHS - cdet(M + diag(d))) v as {mask: coeff mod p}.

    ``v`` (``vectors`` columns) and ``w`` are drawn from a seeded generator.
    """
    dim = space_dim(ops.n, deg)
    rng = np.random.default_rng([seed, deg, p])
    v = rng.integers(0, p, size=(dim, vectors), dtype=np.int64)
    w = rng.integers(0, p, size=(vectors, dim), dtype=np.int64)
    rhs = coldet_apply(ops, deg, v, p, None, stats)
    lhs = lhs_apply(ops, deg, v, p)
    out: dict[int, int] = {}
    for mask in sorted(set(rhs) | {0}):
        res = -rhs.get(mask, np.zeros_like(v)) % p
        if mask == 0:
            res = (res + lhs) % p
        # trace of w @ res mod p, one column at a time to stay in int64
        total = 0
        for c in range(vectors):
            total = (total + _dot_mod(w[c], res[:, c], p)) % p
        if total:
            out[mask] = total
    return out


def _dot_mod(a: np.ndarray, b: np.ndarray, p: int) -> int:
    return int(np.sum((a * b) % p) % p) if a.size else 0


def evaluate_residual(coeffs: dict[int, int], candidates: np.ndarray, p: int) -> np.ndarray:
    """Value of the multilinear residual at every candidate row, mod p."""
    vals = np.zeros(len(candidates), dtype=np.int64)
    cand = candidates.astype(np.int64) % p
    for mask, c in coeffs.items():
        term = np.full(len(candidates), c % p, dtype=np.int64)
        col = 0
        while mask:
            if mask & 1:
                term = (term * cand[:, col]) % p
            mask >>= 1
            col += 1
        vals = (vals + term) % p
    return vals


# -- pass 2: exact verification ------------------------------------------------------------

def abs_bound(ops: IdentityOperators, deg: int, diag: Sequence[int]) -> float:
    """Bound on every integer met while applying LHS or RHS to a basis vector of V_deg.

    Runs both computations with |entries| on the all-ones vector in float64
    and returns the largest intermediate value, inflated against rounding.
    """
    n = ops.n
    ent = ops.entries(deg)
    one = np.ones((space_dim(n, deg), 1))
    layer = {0: one}
    peak = 1.0
    for col in range(n - 1, -1, -1):
        nxt: dict[int, np.ndarray] = {}
        for used, arr in layer.items():
            for r in range(n):
                if used & (1 << r):
                    continue
                acc = np.zeros_like(arr)
                if ent[r][col] is not None:
                    acc += ent[r][col].apply_float(arr)
                if r == col:
                    acc += abs(diag[col]) * arr
                key = used | (1 << r)
                nxt[key] = nxt.get(key, 0) + acc
        layer = nxt
        peak = max([peak] + [float(a.max(initial=0.0)) for a in layer.values()])
    chain = ops.lhs_ops(deg)
    lhs_peak = apply_chain_float(chain, one)[1] if chain else 0.0
    # the residual LHS - RHS is the last value formed
    return (peak + lhs_peak) * 1.001 + 1.0


EXACT_INT64_LIMIT = float(1 << 62)


def choose_moduli(bound: float) -> tuple[int, ...]:
    """(0,) for exact int64, else the fewest primes whose product exceeds 2 * bound."""
    if bound < EXACT_INT64_LIMIT:
        return (0,)
    need = 2 * bound
    for k in range(1, len(PRIMES) + 1):
        if float(prod(PRIMES[:k])) > need:
            return PRIMES[:k]
    raise OverflowError("bound exceeds available CRT modulus")


def chunk_columns(n: int, deg: int, mem_cap: int | None) -> int:
    """Columns per block so that two adjacent DP layers fit in ``mem_cap`` bytes."""
    dim = space_dim(n, deg)
    states = max(comb(n, t) + comb(n, t + 1) for t in range(n))
    per_col = 8 * dim * (states + 3)
    if mem_cap is None:
        return max(1, min(dim, 256))
    k = int(mem_cap // per_col)
    if k < 1:
        raise BudgetExceeded(f"memory cap {mem_cap} B below one column ({per_col} B) at degree {deg}")
    return min(dim, k, 1024)


@dataclass
class ExactProgress:
    """Resumable position of an exact verification: (modulus index, degree, next column)."""

    modulus_index: int = 0
    degree: int = 0
    column: int = 0
    done: bool = False
    holds: bool | None = None
    witness: dict | None = None
    moduli: tuple[int, ...] = ()
    bound: float = 0.0

    def to_dict(self) -> dict:
        return dict(modulus_index=self.modulus_index, degree=self.degree, column=self.column,
                    done=self.done, holds=self.holds, witness=self.witness,
                    moduli=list(self.moduli), bound=self.bound)

    @classmethod
    def from_dict(cls, d: dict) -> "ExactProgress":
        d = dict(d)
        d["moduli"] = tuple(d.get("moduli", ()))
        return cls(**d)


def verify_exact(ops: IdentityOperators, diag: Sequence[int], *,
                 mem_cap: int | None = None, progress: ExactProgress | None = None,
                 on_chunk: Callable[[ExactProgress], None] | None = None,
                 stats: EngineStats | None = None) -> ExactProgress:
    """Decide LHS == cdet(M + diag) on all of V_0..V_n, resuming from ``progress``."""
    n = ops.n
    prog = progress or ExactProgress()
    if not prog.moduli:
        prog.bound = max(abs_bound(ops, deg, diag) for deg in ops.degrees())
        prog.moduli = choose_moduli(prog.bound)
    log.info("exact verification of %s: bound %.3g, moduli %s", list(diag), prog.bound, prog.moduli)
    while not prog.done:
        p = prog.moduli[prog.modulus_index]
        deg = prog.degree
        dim = space_dim(n, deg)
        k = chunk_columns(n, deg, mem_cap)
        j0, j1 = prog.column, min(prog.column + k, dim)
        x = np.zeros((dim, j1 - j0), dtype=np.int64)
        x[np.arange(j0, j1), np.arange(j1 - j0)] = 1
        rhs = coldet_apply(ops, deg, x, p, diag, stats).get(0, np.zeros_like(x))
        res = lhs_apply(ops, deg, x, p) - rhs
        if p:
            res %= p
        bad = np.argwhere(res != 0)
        if bad.size:
            row, col = (int(v) for v in bad[0])
            space = graded_space(n, deg)
            prog.done, prog.holds = True, False
            prog.witness = dict(degree=deg, modulus=p, input=space.exps[j0 + col].tolist(),
                                output=space.exps[row].tolist(), residual=int(res[row, col]))
        elif j1 < dim:
            prog.column = j1
        elif deg < n:
            prog.degree, prog.column = deg + 1, 0
        elif prog.modulus_index + 1 < len(prog.moduli):
            prog.modulus_index, prog.degree, prog.column = prog.modulus_index + 1, 0, 0
        else:
            prog.done, prog.holds = True, True
        if on_chunk is not None:
            on_chunk(prog)
    return prog
