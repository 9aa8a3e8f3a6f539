"""Signed multiplication-table matrices and normed division algebras.

A :class:`TableMatrix` is the combinatorial matrix whose entries are
``+-x_k``, stored as signed 1-based indices.  Admissibility (signed
permutation rows/columns, the 2x2 pairing rule, constant diagonal) is
checked by :func:`check_properties`, never assumed.
"""
from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations, permutations, product
from typing import Sequence

import numpy as np

EXHAUSTIVE_MAX_N = 5


class TableError(ValueError):
    """A table is malformed or violates a required property."""


@dataclass(frozen=True)
class TableMatrix:
    """n x n matrix of signed variable indices; ``-3`` means ``-x_3``."""

    entries: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        rows = tuple(tuple(int(v) for v in r) for r in self.entries)
        n = len(rows)
        if n == 0 or any(len(r) != n for r in rows):
            raise TableError("table must be square and nonempty")
        for r in rows:
            for v in r:
                if v == 0 or abs(v) > n:
                    raise TableError(f"entry {v} outside +-1..+-{n}")
        object.__setattr__(self, "entries", rows)

    @property
    def n(self) -> int:
        return len(self.entries)

    def __getitem__(self, ij: tuple[int, int]) -> int:
        return self.entries[ij[0]][ij[1]]

    def as_array(self) -> np.ndarray:
        return np.array(self.entries, dtype=np.int64)

    def __str__(self):
        return table_to_text(self)


@dataclass
class PropertyReport:
    prop_i: bool
    prop_ii: bool
    prop_iii: bool
    violations: list[str] = field(default_factory=list)

    @property
    def admissible(self) -> bool:
        return self.prop_i and self.prop_ii and self.prop_iii


def _pair_ok(a: int, b: int, c: int, d: int) -> bool:
    # a=d <=> b=-c and a=-d <=> b=c
    return (a == d) == (b == -c) and (a == -d) == (b == c)


def check_properties(t: TableMatrix) -> PropertyReport:
    n = t.n
    e = t.entries
    viol = []
    full = set(range(1, n + 1))
    prop_i = True
    for i in range(n):
        if {abs(v) for v in e[i]} != full:
            prop_i = False
            viol.append(f"row {i + 1} is not a signed permutation: {list(e[i])}")
        col = [e[r][i] for r in range(n)]
        if {abs(v) for v in col} != full:
            prop_i = False
            viol.append(f"column {i + 1} is not a signed permutation: {col}")
    prop_ii = True
    for r1, r2 in combinations(range(n), 2):
        for c1, c2 in combinations(range(n), 2):
            a, b, c, d = e[r1][c1], e[r1][c2], e[r2][c1], e[r2][c2]
            if not _pair_ok(a, b, c, d):
                prop_ii = False
                viol.append(f"2x2 submatrix rows ({r1 + 1},{r2 + 1}) cols ({c1 + 1},{c2 + 1}): "
                            f"[[{a}, {b}], [{c}, {d}]]")
    prop_iii = len({e[i][i] for i in range(n)}) == 1
    if not prop_iii:
        viol.append(f"diagonal not constant: {[e[i][i] for i in range(n)]}")
    return PropertyReport(prop_i, prop_ii, prop_iii, viol)


def is_admissible(t: TableMatrix) -> bool:
    return check_properties(t).admissible


def is_normalized(t: TableMatrix) -> bool:
    n = t.n
    return all(t[i, i] == -1 for i in range(n)) and all(t[0, j] == j + 1 for j in range(1, n))


# -- relabeling ---------------------------------------------------------------

@dataclass(frozen=True)
class Relabeling:
    """Signed renaming of variables, optionally after negating the whole table.

    ``var_map[k-1] = s*j`` sends ``x_k`` to ``s*x_j``.
    """

    var_map: tuple[int, ...]
    negate: bool = False

    def then(self, other: "Relabeling") -> "Relabeling":
        """Composition: apply ``self`` first, then ``other``."""
        vm = []
        for v in self.var_map:
            w = other.var_map[abs(v) - 1]
            vm.append(w if v > 0 else -w)
        return Relabeling(tuple(vm), self.negate != other.negate)


def identity_relabeling(n: int) -> Relabeling:
    return Relabeling(tuple(range(1, n + 1)))


def apply_relabeling(t: TableMatrix, r: Relabeling) -> TableMatrix:
    g = -1 if r.negate else 1
    out = []
    for row in t.entries:
        new = []
        for v in row:
            w = r.var_map[abs(v) - 1]
            new.append(g * (w if v > 0 else -w))
        out.append(tuple(new))
    return TableMatrix(tuple(out))


def basis_sign_flip(t: TableMatrix, k: int) -> TableMatrix:
    """Table for the basis with e_k replaced by -e_k.

    Negates row k, column k and the variable x_k.
    """
    n = t.n
    out = []
    for i in range(n):
        row = []
        for j in range(n):
            v = t[i, j]
            if abs(v) == k:
                v = -v
            if (i == k - 1) != (j == k - 1):
                v = -v
            row.append(v)
        out.append(tuple(row))
    return TableMatrix(tuple(out))


def normalize(t: TableMatrix) -> tuple[TableMatrix, Relabeling]:
    """Bring an admissible table to diagonal ``-x_1`` and first row ``[-x_1, x_2, ..., x_n]``.

    Returns the normalized table and the relabeling that produced it.
    """
    if not is_admissible(t):
        raise TableError("cannot normalize a table that is not admissible")
    n = t.n
    rel = identity_relabeling(n)
    diag = t[0, 0]
    if diag > 0:
        rel = Relabeling(rel.var_map, True)
    # x_k (the diagonal variable) <-> x_1
    k = abs(diag)
    vm = list(range(1, n + 1))
    vm[k - 1], vm[0] = 1, k
    rel = rel.then(Relabeling(tuple(vm)))
    cur = apply_relabeling(t, rel)
    if cur[0, 0] != -1:
        raise TableError("diagonal normalization failed")
    # first row: entry (1, j) = s*x_m  ->  rename x_m to s*x_j
    vm = [0] * n
    vm[0] = 1
    for j in range(1, n):
        v = cur[0, j]
        vm[abs(v) - 1] = (j + 1) if v > 0 else -(j + 1)
    if 0 in vm:
        raise TableError("first row is not a signed permutation")
    rel = rel.then(Relabeling(tuple(vm)))
    out = apply_relabeling(t, rel)
    if not is_normalized(out):
        raise TableError("normalization failed")
    return out, rel


# -- the algebra D ------------------------------------------------------------

@dataclass(frozen=True)
class DivisionAlgebraTable:
    """Basis multiplication e_i e_j = sign[i,j] * e_{index[i,j]} (0-based arrays)."""

    n: int
    sign: np.ndarray
    index: np.ndarray

    def structure_constants(self) -> np.ndarray:
        """c[i, j, k] with e_i e_j = sum_k c[i, j, k] e_k."""
        c = np.zeros((self.n,) * 3, dtype=np.int64)
        for i in range(self.n):
            for j in range(self.n):
                c[i, j, self.index[i, j]] = self.sign[i, j]
        return c

    def basis_product(self, i: int, j: int) -> tuple[int, int]:
        """(sign, k) for e_i e_j with 1-based indices."""
        return int(self.sign[i - 1, j - 1]), int(self.index[i - 1, j - 1]) + 1

    def multiply(self, a: Sequence, b: Sequence) -> list:
        out = [0] * self.n
        for i, ai in enumerate(a):
            if not ai:
                continue
            for j, bj in enumerate(b):
                if bj:
                    out[self.index[i, j]] += int(self.sign[i, j]) * ai * bj
        return out


def build_algebra(t: TableMatrix, auto_normalize: bool = True) -> DivisionAlgebraTable:
    """The algebra with e_1 = 1 and e_i e_j = A_ij for i, j >= 2."""
    if not is_admissible(t):
        raise TableError("table is not admissible")
    if not is_normalized(t):
        if not auto_normalize:
            raise TableError("table is not normalized")
        t, _ = normalize(t)
    n = t.n
    sign = np.ones((n, n), dtype=np.int64)
    index = np.zeros((n, n), dtype=np.int64)
    for j in range(n):
        index[0, j] = j
        index[j, 0] = j
    for i in range(1, n):
        for j in range(1, n):
            v = t[i, j]
            sign[i, j] = 1 if v > 0 else -1
            index[i, j] = abs(v) - 1
    return DivisionAlgebraTable(n, sign, index)


def table_from_algebra(alg: DivisionAlgebraTable) -> TableMatrix:
    """Normalized table of an algebra whose e_1 is the identity."""
    n = alg.n
    rows = []
    for i in range(n):
        row = []
        for j in range(n):
            if i == 0:
                row.append(-1 if j == 0 else j + 1)
            elif j == 0:
                row.append(-(i + 1))
            else:
                s, k = alg.basis_product(i + 1, j + 1)
                row.append(s * k)
        rows.append(tuple(row))
    return TableMatrix(tuple(rows))


def _rand_vector(rng: random.Random, n: int) -> list[Fraction]:
    return [Fraction(rng.randint(-10, 10), rng.randint(1, 10)) for _ in range(n)]


def norm(v: Sequence) -> Fraction:
    return sum((Fraction(x) * x for x in v), Fraction(0))


def norm_multiplicative(alg: DivisionAlgebraTable, trials: int = 200, seed: int = 0) -> bool:
    """N(ab) == N(a) N(b) on ``trials`` random exact-rational pairs."""
    rng = random.Random(seed)
    for _ in range(trials):
        a = _rand_vector(rng, alg.n)
        b = _rand_vector(rng, alg.n)
        if norm(alg.multiply(a, b)) != norm(a) * norm(b):
            return False
    return True


def check_alternative(alg: DivisionAlgebraTable, trials: int = 50, seed: int = 0) -> bool:
    """Left/right alternative laws and the Moufang identity (xy)(zx) = x((yz)x)."""
    rng = random.Random(seed)
    m = alg.multiply
    for _ in range(trials):
        x, y, z = (_rand_vector(rng, alg.n) for _ in range(3))
        xx = m(x, x)
        if m(x, m(x, y)) != m(xx, y) or m(m(y, x), x) != m(y, xx):
            return False
        if m(m(x, y), m(z, x)) != m(x, m(m(y, z), x)):
            return False
    return True


def is_associative(alg: DivisionAlgebraTable) -> bool:
    """Associativity on all basis triples."""
    n = alg.n
    for i, j, k in product(range(1, n + 1), repeat=3):
        s1, ij = alg.basis_product(i, j)
        s2, ij_k = alg.basis_product(ij, k)
        s3, jk = alg.basis_product(j, k)
        s4, i_jk = alg.basis_product(i, jk)
        if (s1 * s2, ij_k) != (s3 * s4, i_jk):
            return False
    return True


def triple_sign(t: TableMatrix) -> int:
    """Sign s with e_2 (e_3 e_4) = s * 1 in the algebra built from ``t``."""
    if t.n != 4:
        raise TableError("triple sign is defined for 4x4 tables only")
    alg = build_algebra(t)
    s1, k = alg.basis_product(3, 4)
    s2, m = alg.basis_product(2, k)
    if m != 1:
        raise TableError("e_2 e_3 e_4 is not a multiple of the identity")
    return s1 * s2


# -- proof machinery: U_i, K_i and the lemma checks -----------------------------

def _require_normalized(t: TableMatrix) -> None:
    if not is_normalized(t):
        raise TableError("table must be normalized (diagonal -x_1, first row -x_1, x_2, ...)")


def extract_u(t: TableMatrix, i: int) -> np.ndarray:
    """Sign matrix U_i with column i of the table equal to U_i X."""
    _require_normalized(t)
    n = t.n
    if not 2 <= i <= n:
        raise IndexError(f"U index {i} outside 2..{n}")
    u = np.zeros((n, n), dtype=np.int64)
    for r in range(n):
        v = t[r, i - 1]
        u[r, abs(v) - 1] = 1 if v > 0 else -1
    if not (np.array_equal(u.T, -u) and np.array_equal(u @ u.T, np.eye(n, dtype=np.int64))):
        raise TableError(f"U_{i} is not a skew-symmetric orthogonal sign matrix")
    return u


def k_matrix(n: int, i: int) -> np.ndarray:
    """Diagonal K_i: +1 at positions 1 and i, -1 elsewhere."""
    k = -np.ones(n, dtype=np.int64)
    k[0] = 1
    k[i - 1] = 1
    return np.diag(k)


def check_anticommutation(t: TableMatrix) -> bool:
    us = {i: extract_u(t, i) for i in range(2, t.n + 1)}
    return all(np.array_equal(us[i] @ us[j], -(us[j] @ us[i]))
               for i, j in combinations(us, 2))


def skew_products(t: TableMatrix) -> dict[tuple[int, int], np.ndarray]:
    """U_i^T K_i K_j U_j for 2 <= i < j <= n."""
    n = t.n
    us = {i: extract_u(t, i) for i in range(2, n + 1)}
    ks = {i: k_matrix(n, i) for i in range(2, n + 1)}
    return {(i, j): us[i].T @ ks[i] @ ks[j] @ us[j] for i, j in combinations(us, 2)}


def orthogonal_rows(t: TableMatrix, L: Sequence) -> bool:
    """Rows L^T, L^T U_i^T K_i (i = 2..n) are pairwise orthogonal."""
    n = t.n
    Lc = [Fraction(v) for v in L]
    rows = [Lc]
    for i in range(2, n + 1):
        m = extract_u(t, i).T @ k_matrix(n, i)
        rows.append([sum((Lc[r] * int(m[r, c]) for r in range(n)), Fraction(0)) for c in range(n)])
    for a, b in combinations(rows, 2):
        if sum((x * y for x, y in zip(a, b)), Fraction(0)) != 0:
            return False
    return True


def check_skew_products(t: TableMatrix, trials: int = 20, seed: int = 0) -> bool:
    if not all(np.array_equal(m.T, -m) for m in skew_products(t).values()):
        return False
    rng = random.Random(seed)
    return all(orthogonal_rows(t, _rand_vector(rng, t.n)) for _ in range(trials))


def quadratic_form_vanishes(m: np.ndarray, trials: int = 100, seed: int = 0) -> bool:
    """P^T M P == 0 for ``trials`` random rational P."""
    rng = random.Random(seed)
    n = m.shape[0]
    for _ in range(trials):
        p = _rand_vector(rng, n)
        q = sum((p[r] * int(m[r, c]) * p[c] for r in range(n) for c in range(n)), Fraction(0))
        if q != 0:
            return False
    return True


def commutator_identity(t: TableMatrix, i: int, j: int) -> np.ndarray:
    """[U_i, S] U_j + [U_j, S] U_i with S = K_i K_j (zero when the identity holds)."""
    n = t.n
    ui, uj = extract_u(t, i), extract_u(t, j)
    s = k_matrix(n, i) @ k_matrix(n, j)
    return (ui @ s - s @ ui) @ uj + (uj @ s - s @ uj) @ ui


# -- enumeration -----------------------------------------------------------------

def _signed_perms(n: int):
    for p in permutations(range(1, n + 1)):
        for signs in product((1, -1), repeat=n):
            yield tuple(s * v for s, v in zip(signs, p))


def _compatible(row: tuple[int, ...], prev: tuple[int, ...]) -> bool:
    n = len(row)
    for c1 in range(n):
        a, c = prev[c1], row[c1]
        for c2 in range(c1 + 1, n):
            if not _pair_ok(a, prev[c2], c, row[c2]):
                return False
    return True


def enumerate_admissible(n: int, normalized_only: bool = True) -> list[TableMatrix]:
    """All admissible n x n tables in lexicographic order of their rows.

    With ``normalized_only`` the first row is fixed to ``[-x_1, x_2, ..., x_n]``
    and the diagonal to ``-x_1``.
    """
    if n < 1:
        raise ValueError("n must be positive")
    if n > EXHAUSTIVE_MAX_N:
        raise ValueError(f"exhaustive enumeration limited to n <= {EXHAUSTIVE_MAX_N}")
    rows_all = sorted(_signed_perms(n))
    results: list[TableMatrix] = []

    def extend(rows: list[tuple[int, ...]], diag: int) -> None:
        r = len(rows)
        if r == n:
            results.append(TableMatrix(tuple(rows)))
            return
        for cand in rows_all:
            if cand[r] != diag:
                continue
            if any(cand[c] == prev[c] or cand[c] == -prev[c] for prev in rows for c in range(n)):
                continue
            if all(_compatible(cand, prev) for prev in rows):
                rows.append(cand)
                extend(rows, diag)
                rows.pop()

    if normalized_only:
        first = (-1,) + tuple(range(2, n + 1))
        extend([first], -1)
    else:
        for first in rows_all:
            extend([first], first[0])
    results.sort(key=lambda t: t.entries)
    return results


# -- text format -------------------------------------------------------------------

def table_to_text(t: TableMatrix) -> str:
    width = max(len(str(v)) for r in t.entries for v in r)
    lines = [str(t.n)] + [" ".join(str(v).rjust(width) for v in r) for r in t.entries]
    return "\n".join(lines) + "\n"


def parse_table(text: str) -> TableMatrix:
    """Parse the plain-text grid: a dimension line, then n rows of n signed ints.

    Blank lines and ``#`` comments are ignored.
    """
    lines = [ln.split("#", 1)[0].strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln]
    if not lines:
        raise TableError("empty table file")
    try:
        n = int(lines[0])
        rows = [tuple(int(tok) for tok in ln.replace(",", " ").split()) for ln in lines[1:]]
    except ValueError as exc:
        raise TableError(f"malformed table: {exc}") from None
    if n < 1 or len(rows) != n:
        raise TableError(f"expected {n} rows, found {len(rows)}")
    return TableMatrix(tuple(rows))


# -- built-in tables ------------------------------------------------------------------

QUATERNION_PAPER = TableMatrix((
    (-1, 2, 3, 4),
    (-2, -1, 4, -3),
    (-3, -4, -1, 2),
    (-4, 3, -2, -1),
))

# imaginary units 1..7 (basis index 2..8); e_a e_b = e_c along each line
FANO_LINES = ((1, 2, 3), (1, 4, 5), (1, 7, 6), (2, 4, 6), (2, 5, 7), (3, 4, 7), (3, 6, 5))


def _octonion_standard() -> TableMatrix:
    n = 8
    sign = np.ones((n, n), dtype=np.int64)
    index = np.zeros((n, n), dtype=np.int64)
    for i in range(n):
        index[0, i] = index[i, 0] = i
    for a in range(1, n):
        sign[a, a], index[a, a] = -1, 0
    for line in FANO_LINES:
        for r in range(3):
            a, b, c = line[r], line[(r + 1) % 3], line[(r + 2) % 3]
            sign[a, b], index[a, b] = 1, c
            sign[b, a], index[b, a] = -1, c
    return table_from_algebra(DivisionAlgebraTable(n, sign, index))


BUILTIN_TABLES: dict[str, TableMatrix] = {
    "real": TableMatrix(((-1,),)),
    "complex-standard": TableMatrix(((-1, 2), (-2, -1))),
    "quaternion-paper": QUATERNION_PAPER,
    "octonion-standard": _octonion_standard(),
}


def load_builtin(name: str) -> TableMatrix:
    try:
        t = BUILTIN_TABLES[name]
    except KeyError:
        raise TableError(f"unknown table {name!r}; known: {', '.join(sorted(BUILTIN_TABLES))}") from None
    rep = check_properties(t)
    if not rep.admissible:
        raise TableError(f"built-in table {name} failed validation: {rep.violations[:3]}")
    return t
