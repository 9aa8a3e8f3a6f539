"""Weyl operators acting on spaces of homogeneous polynomials.

Every operator handled here has terms x^a D^b; such a term maps the
degree-m monomials to degree m - |b| + |a|.  Two operators of D-order at
most ``k`` that preserve degree are equal iff they agree on every
homogeneous polynomial of degree <= ``k``, which turns identity testing in
the Weyl algebra into finite linear algebra.  Arithmetic is exact int64
when an a-priori bound allows it, otherwise modulo 28-bit primes.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from itertools import combinations_with_replacement
from math import comb

import numpy as np

from . import kernels
from .weyl_core import (BLOCK_MASK, D_SHIFT, P_SHIFT, WeylElement, unpack)

# largest primes below 2**28
PRIMES = (268435399, 268435367, 268435361, 268435337, 268435331, 268435313, 268435291, 268435273)


class GradedSpace:
    """Monomial basis of the degree-m homogeneous polynomials in n variables."""

    def __init__(self, n: int, m: int):
        self.n = n
        self.m = m
        exps = []
        for combo in combinations_with_replacement(range(n), m):
            e = [0] * n
            for v in combo:
                e[v] += 1
            exps.append(e)
        self.exps = np.array(exps, dtype=np.int64).reshape(len(exps), n)
        self.base = m + 1
        self.weights = self.base ** np.arange(n, dtype=np.int64)
        keys = self.exps @ self.weights
        # basis ordered by packed key, so lookups are a binary search
        order = np.argsort(keys)
        self.exps = self.exps[order]
        self.keys = keys[order]

    @property
    def dim(self) -> int:
        return len(self.keys)

    def index_of(self, exps: np.ndarray) -> np.ndarray:
        keys = exps @ self.weights
        idx = np.searchsorted(self.keys, keys)
        idx = np.minimum(idx, self.dim - 1)
        if not np.array_equal(self.keys[idx], keys):
            raise KeyError("exponent vector outside the space")
        return idx


@lru_cache(maxsize=64)
def graded_space(n: int, m: int) -> GradedSpace:
    return GradedSpace(n, m)


def space_dim(n: int, m: int) -> int:
    return comb(n + m - 1, m) if m >= 0 else 0


@dataclass
class SparseOp:
    """CSR matrix of an operator V_src -> V_dst with exact integer entries."""

    n: int
    src: int
    dst: int
    indptr: np.ndarray
    indices: np.ndarray
    data: np.ndarray  # int64, exact
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def nnz(self) -> int:
        return int(self.indices.size)

    def signed_data(self, p: int, sign: int) -> np.ndarray:
        """Entries times ``sign``, reduced mod ``p`` unless ``p == 0``."""
        key = (p, sign)
        d = self._cache.get(key)
        if d is None:
            d = self.data if sign > 0 else -self.data
            if p:
                d = d % p
            self._cache[key] = d
        return d

    def apply(self, x: np.ndarray, out: np.ndarray, p: int = 0, sign: int = 1) -> None:
        """out += sign * A @ x, mod p when p > 0."""
        kernels.spmm_acc(self.indptr, self.indices, self.signed_data(p, sign), x, out, p)

    def apply_float(self, x: np.ndarray) -> np.ndarray:
        """|A| @ x in float64 (for bounds)."""
        out = np.zeros((space_dim(self.n, self.dst),) + x.shape[1:], dtype=np.float64)
        if self.nnz == 0:
            return out
        prod = np.abs(self.data).astype(np.float64)[:, None] * x[self.indices]
        nonempty = np.flatnonzero(self.indptr[1:] > self.indptr[:-1])
        out[nonempty] = np.add.reduceat(prod, self.indptr[nonempty], axis=0)
        return out


def weyl_terms(w: WeylElement) -> list[tuple[int, tuple[int, ...], tuple[int, ...]]]:
    """(coeff, xexp, dexp) triples of a parameter-free element."""
    n = w.n
    out = []
    for k, c in w.terms.items():
        if k >> P_SHIFT:
            raise ValueError("operator has parameter-dependent coefficients")
        out.append((c, unpack(k & BLOCK_MASK, n), unpack((k >> D_SHIFT) & BLOCK_MASK, n)))
    return out


def build_operator(w: WeylElement, src: int) -> SparseOp:
    """Matrix of ``w`` restricted to V_src; ``w`` must be homogeneous of some x-D degree shift."""
    n = w.n
    terms = weyl_terms(w)
    shifts = {sum(a) - sum(b) for _, a, b in terms}
    if len(shifts) > 1:
        raise ValueError("operator mixes degree shifts")
    dst = src + (shifts.pop() if shifts else 0)
    if dst < 0 or not terms:
        return SparseOp(n, src, max(dst, 0), np.zeros(space_dim(n, max(dst, 0)) + 1, dtype=np.int64),
                        np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64))
    vs = graded_space(n, src)
    vd = graded_space(n, dst)
    rows, cols, vals = [], [], []
    src_idx = np.arange(vs.dim, dtype=np.int64)
    for c, a, b in terms:
        a = np.array(a, dtype=np.int64)
        b = np.array(b, dtype=np.int64)
        ok = np.all(vs.exps >= b, axis=1)
        e = vs.exps[ok]
        ff = np.ones(len(e), dtype=np.int64)
        for i in range(n):
            for t in range(int(b[i])):
                ff *= e[:, i] - t
        rows.append(vd.index_of(e - b + a))
        cols.append(src_idx[ok])
        vals.append(c * ff)
    return _to_csr(n, src, dst, vd.dim, np.concatenate(rows), np.concatenate(cols), np.concatenate(vals))


def _to_csr(n, src, dst, nrows, rows, cols, vals) -> SparseOp:
    order = np.lexsort((cols, rows))
    rows, cols, vals = rows[order], cols[order], vals[order]
    if rows.size:
        new = np.ones(rows.size, dtype=bool)
        new[1:] = (rows[1:] != rows[:-1]) | (cols[1:] != cols[:-1])
        starts = np.flatnonzero(new)
        vals = np.add.reduceat(vals, starts)
        rows, cols = rows[starts], cols[starts]
        keep = vals != 0
        rows, cols, vals = rows[keep], cols[keep], vals[keep]
    indptr = np.zeros(nrows + 1, dtype=np.int64)
    np.add.at(indptr, rows + 1, 1)
    indptr = np.cumsum(indptr)
    return SparseOp(n, src, dst, indptr, cols.astype(np.int64), vals.astype(np.int64))


def apply_chain(ops: list[SparseOp], x: np.ndarray, p: int = 0) -> np.ndarray:
    """ops[0] (ops[1] (... ops[-1] x)), mod p when p > 0."""
    for op in reversed(ops):
        out = np.zeros((space_dim(op.n, op.dst), x.shape[1]), dtype=np.int64)
        op.apply(x, out, p)
        x = out
    return x


def apply_chain_float(ops: list[SparseOp], x: np.ndarray) -> tuple[np.ndarray, float]:
    """|ops| applied to ``x`` in float64, with the largest intermediate entry."""
    peak = float(np.max(x, initial=0.0))
    for op in reversed(ops):
        x = op.apply_float(x)
        peak = max(peak, float(np.max(x, initial=0.0)))
    return x, peak


def polynomial_to_vector(p: WeylElement, m: int) -> np.ndarray:
    """Exact coefficient vector (object dtype) of the degree-m part of a pure-x element."""
    space = graded_space(p.n, m)
    out = np.zeros(space.dim, dtype=object)
    for k, c in p.terms.items():
        if k >> D_SHIFT:
            raise ValueError("not a commutative polynomial")
        e = np.array(unpack(k, p.n), dtype=np.int64)
        if e.sum() == m:
            out[int(space.index_of(e[None, :])[0])] += c
    return out
