"""Square matrices over the Weyl algebra and their column-determinants."""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from itertools import combinations, permutations
from typing import Callable, Sequence

from .weyl_core import WeylAlgebra, WeylElement, add_many, mul_into, P_SHIFT

log = logging.getLogger(__name__)

BRUTE_FORCE_MAX_N = 5


class WeylMatrix:
    """Immutable n x n matrix of :class:`WeylElement` sharing one algebra."""

    __slots__ = ("alg", "rows")

    def __init__(self, rows: Sequence[Sequence[WeylElement]]):
        rows = tuple(tuple(r) for r in rows)
        if not rows or any(len(r) != len(rows) for r in rows):
            raise ValueError("matrix must be square and nonempty")
        alg = rows[0][0].alg
        if any(w.alg is not alg for r in rows for w in r):
            raise ValueError("entries belong to different algebras")
        self.alg = alg
        self.rows = rows

    @property
    def dim(self) -> int:
        return len(self.rows)

    def __getitem__(self, ij: tuple[int, int]) -> WeylElement:
        i, j = ij
        return self.rows[i][j]

    def __eq__(self, other):
        return isinstance(other, WeylMatrix) and self.alg is other.alg and self.rows == other.rows

    def __hash__(self):
        return hash(self.rows)

    def __repr__(self):
        return "WeylMatrix([\n" + "\n".join("  [" + ", ".join(map(str, r)) + "]" for r in self.rows) + "\n])"

    @classmethod
    def identity(cls, alg: WeylAlgebra, dim: int | None = None) -> "WeylMatrix":
        dim = alg.n if dim is None else dim
        return cls([[alg.one() if i == j else alg.zero() for j in range(dim)] for i in range(dim)])

    @classmethod
    def zeros(cls, alg: WeylAlgebra, dim: int | None = None) -> "WeylMatrix":
        dim = alg.n if dim is None else dim
        return cls([[alg.zero()] * dim for _ in range(dim)])

    def map(self, fn: Callable[[WeylElement], WeylElement]) -> "WeylMatrix":
        return WeylMatrix([[fn(w) for w in r] for r in self.rows])

    def transpose(self) -> "WeylMatrix":
        return WeylMatrix(list(zip(*self.rows)))

    def __add__(self, other: "WeylMatrix") -> "WeylMatrix":
        _check_dims(self, other)
        return WeylMatrix([[a + b for a, b in zip(ra, rb)] for ra, rb in zip(self.rows, other.rows)])

    def __matmul__(self, other: "WeylMatrix") -> "WeylMatrix":
        return mat_mul(self, other)


def _check_dims(a: WeylMatrix, b: WeylMatrix) -> None:
    if a.dim != b.dim:
        raise ValueError(f"dimension mismatch: {a.dim} vs {b.dim}")
    if a.alg is not b.alg:
        raise ValueError("matrices live over different algebras")


def mat_mul(a: WeylMatrix, b: WeylMatrix) -> WeylMatrix:
    """(ab)_ij = sum_k a_ik * b_kj, a-entry on the left."""
    _check_dims(a, b)
    n = a.dim
    out = []
    for i in range(n):
        row = []
        for j in range(n):
            acc: dict[int, int] = {}
            for k in range(n):
                mul_into(acc, a.rows[i][k], b.rows[k][j])
            row.append(WeylElement(a.alg, acc))
        out.append(row)
    return WeylMatrix(out)


def add_diag(m: WeylMatrix, d: Sequence[int] | str) -> WeylMatrix:
    """Add ``diag(d)`` to ``m``; ``d="symbolic"`` adds the central parameters d_i.

    Symbolic mode needs ``m.dim == m.alg.n`` since d_i is indexed by the
    algebra's variables.
    """
    alg = m.alg
    n = m.dim
    if isinstance(d, str):
        if d != "symbolic":
            raise ValueError(f"unknown diag mode {d!r}")
        if n != alg.n:
            raise ValueError("symbolic diag needs matrix dimension equal to algebra rank")
        shift = [alg.param(i + 1) for i in range(n)]
    else:
        if len(d) != n:
            raise ValueError(f"diag has length {len(d)}, matrix has dimension {n}")
        shift = [alg.scalar(int(v)) for v in d]
    return WeylMatrix([[w + shift[i] if i == j else w for j, w in enumerate(r)]
                       for i, r in enumerate(m.rows)])


@dataclass
class DetStats:
    """Per-layer statistics of a column-determinant run."""

    layer_terms: list[int] = field(default_factory=list)
    layer_seconds: list[float] = field(default_factory=list)

    @property
    def peak_terms(self) -> int:
        return max(self.layer_terms, default=0)


def column_det(m: WeylMatrix, *, order: str = "column", stats: DetStats | None = None) -> WeylElement:
    """Column-determinant sum_sigma sgn(sigma) m[s1,1] m[s2,2] ... m[sn,n].

    Factors are multiplied left to right by ascending column.  Evaluated by
    dynamic programming over the set of rows already used; layer ``j``
    depends only on layer ``j - 1``.  ``order="row"`` computes the
    row-determinant sum sgn m[1,s1] ... m[n,sn] instead (experimental).
    """
    if order == "row":
        return column_det(m.transpose(), stats=stats)
    if order != "column":
        raise ValueError(f"unknown determinant order {order!r}")
    n = m.dim
    alg = m.alg
    layer: dict[int, WeylElement] = {0: alg.one()}
    for col in range(n):
        t0 = time.perf_counter()
        nxt: dict[int, dict[int, int]] = {}
        # states in ascending mask order: deterministic accumulation
        for mask in sorted(layer):
            f = layer[mask]
            for r in range(n):
                bit = 1 << r
                if mask & bit:
                    continue
                entry = m.rows[r][col]
                if not entry.terms:
                    continue
                # rows already used that sit below r
                sign = -1 if bin(mask >> (r + 1)).count("1") & 1 else 1
                mul_into(nxt.setdefault(mask | bit, {}), f, entry, sign)
        layer = {k: WeylElement(alg, v) for k, v in nxt.items()}
        layer = {k: v for k, v in layer.items() if v.terms}
        if stats is not None:
            stats.layer_terms.append(sum(len(v) for v in layer.values()))
            stats.layer_seconds.append(time.perf_counter() - t0)
        log.debug("column_det layer %d: %d states", col + 1, len(layer))
    return layer.get((1 << n) - 1, alg.zero())


def perm_sign(p: Sequence[int]) -> int:
    """Sign of a permutation of 0..n-1 by inversion count."""
    inv = sum(1 for i, j in combinations(range(len(p)), 2) if p[i] > p[j])
    return -1 if inv & 1 else 1


def brute_force_det(m: WeylMatrix) -> WeylElement:
    """Column-determinant by the explicit permutation sum (test oracle)."""
    n = m.dim
    if n > BRUTE_FORCE_MAX_N:
        raise ValueError(f"brute force limited to n <= {BRUTE_FORCE_MAX_N}")
    alg = m.alg
    parts = []
    for sigma in permutations(range(n)):
        prod = alg.scalar(perm_sign(sigma))
        for col, row in enumerate(sigma):
            prod = prod * m.rows[row][col]
            if not prod.terms:
                break
        parts.append(prod)
    return add_many(parts, alg)


def transpose_substitute(m: WeylMatrix) -> WeylMatrix:
    """Transpose ``m`` and replace every x_k by D_k, keeping signs.

    Every entry must be a single term ``+-x_k``.
    """
    alg = m.alg
    for r in m.rows:
        for w in r:
            if not _is_signed_variable(w):
                raise ValueError(f"entry {w} is not of the form +-x_k")
    return WeylMatrix([[_to_derivative(m.rows[j][i]) for j in range(m.dim)] for i in range(m.dim)])


def _is_signed_variable(w: WeylElement) -> bool:
    if len(w.terms) != 1:
        return False
    (k, c), = w.terms.items()
    return c in (1, -1) and k >> 64 == 0 and k > 0 and k & (k - 1) == 0


def _to_derivative(w: WeylElement) -> WeylElement:
    (k, c), = w.terms.items()
    return WeylElement(w.alg, {k << 64: c}, True)


def commutative_det(m: WeylMatrix) -> WeylElement:
    """Determinant of a matrix with pairwise commuting entries.

    Uses the same subset recursion as :func:`column_det`; the caller is
    responsible for the entries actually commuting.
    """
    return column_det(m)


def has_parameters(w: WeylElement) -> bool:
    return any(k >> P_SHIFT for k in w.terms)
