"""Exact arithmetic in the Weyl algebra A_n over Z[d_1..d_n].

Elements are stored in normal order (every ``x`` left of every ``D``)
as a dict from a packed integer key to a nonzero Python int.  A key
holds three blocks of eight 8-bit exponent fields::

    bits   0..63   x_1 .. x_8
    bits  64..127  D_1 .. D_8      (D_i = d/dx_i)
    bits 128..191  d_1 .. d_8      (central parameters)

so multiplying two monomials that need no reordering is plain integer
addition of their keys.  Exponents must stay below 256.
"""
from __future__ import annotations

from functools import lru_cache
from math import comb, factorial
from typing import Iterable, Mapping, Sequence

MAX_VARS = 8
FIELD_BITS = 8
FIELD_MASK = (1 << FIELD_BITS) - 1
BLOCK_BITS = FIELD_BITS * MAX_VARS
BLOCK_MASK = (1 << BLOCK_BITS) - 1
X_SHIFT = 0
D_SHIFT = BLOCK_BITS
P_SHIFT = 2 * BLOCK_BITS


class ContextError(ValueError):
    """Operands belong to Weyl algebras of different rank."""


def pack(exps: Sequence[int], shift: int = 0) -> int:
    key = 0
    for i, e in enumerate(exps):
        if not 0 <= e <= FIELD_MASK:
            raise OverflowError(f"exponent {e} does not fit a {FIELD_BITS}-bit field")
        key |= e << (shift + FIELD_BITS * i)
    return key


def unpack(block: int, n: int) -> tuple[int, ...]:
    return tuple((block >> (FIELD_BITS * i)) & FIELD_MASK for i in range(n))


def _support(block: int) -> int:
    """Bit i set iff field i of ``block`` is nonzero."""
    s = 0
    i = 0
    while block:
        if block & FIELD_MASK:
            s |= 1 << i
        block >>= FIELD_BITS
        i += 1
    return s


@lru_cache(maxsize=1 << 16)
def _reorder(dblock: int, xblock: int) -> tuple[tuple[int, int], ...]:
    """Expansion of D^b x^c in normal order.

    Returns pairs ``(shift_down, mult)``: the term is
    ``mult * x^(c-k) D^(b-k)``, and ``shift_down`` is the key amount to
    subtract from ``pack(c) + pack(b, D_SHIFT)`` to reach it.
    """
    terms = [(0, 1)]
    i = 0
    while dblock and xblock:
        b = dblock & FIELD_MASK
        c = xblock & FIELD_MASK
        if b and c:
            unit = (1 << (FIELD_BITS * i)) | (1 << (D_SHIFT + FIELD_BITS * i))
            local = [(k * unit, comb(b, k) * comb(c, k) * factorial(k)) for k in range(min(b, c) + 1)]
            terms = [(s + t, m * u) for s, m in terms for t, u in local]
        dblock >>= FIELD_BITS
        xblock >>= FIELD_BITS
        i += 1
    return tuple(terms)


class Monomial:
    """Normal-ordered word x^xexp D^dexp (a view used for ordering and display)."""

    __slots__ = ("xexp", "dexp")

    def __init__(self, xexp: Sequence[int], dexp: Sequence[int]):
        if len(xexp) != len(dexp):
            raise ValueError("x and D exponent vectors differ in length")
        self.xexp = tuple(xexp)
        self.dexp = tuple(dexp)

    @classmethod
    def from_key(cls, key: int, n: int) -> "Monomial":
        return cls(unpack(key & BLOCK_MASK, n), unpack((key >> D_SHIFT) & BLOCK_MASK, n))

    @property
    def key(self) -> int:
        return pack(self.xexp) | pack(self.dexp, D_SHIFT)

    @property
    def degree(self) -> int:
        return sum(self.xexp) + sum(self.dexp)

    def sort_key(self) -> tuple:
        # graded lexicographic on the concatenated exponent vector
        return (self.degree, self.xexp + self.dexp)

    def __eq__(self, other):
        return isinstance(other, Monomial) and (self.xexp, self.dexp) == (other.xexp, other.dexp)

    def __lt__(self, other: "Monomial") -> bool:
        return self.sort_key() < other.sort_key()

    def __hash__(self):
        return hash((self.xexp, self.dexp))

    def __repr__(self):
        return f"Monomial({self.xexp}, {self.dexp})"


class WeylAlgebra:
    """Rank-``n`` algebra context; elements of different contexts never mix."""

    _cache: dict[int, "WeylAlgebra"] = {}

    def __new__(cls, n: int):
        if not 1 <= n <= MAX_VARS:
            raise ValueError(f"rank must be in 1..{MAX_VARS}, got {n}")
        alg = cls._cache.get(n)
        if alg is None:
            alg = super().__new__(cls)
            alg.n = n
            cls._cache[n] = alg
        return alg

    def __reduce__(self):
        return (WeylAlgebra, (self.n,))

    def __repr__(self):
        return f"WeylAlgebra({self.n})"

    def _check_index(self, i: int) -> None:
        if not 1 <= i <= self.n:
            raise IndexError(f"index {i} outside 1..{self.n}")

    def zero(self) -> "WeylElement":
        return WeylElement(self, {})

    def one(self) -> "WeylElement":
        return self.scalar(1)

    def scalar(self, c: int) -> "WeylElement":
        return WeylElement(self, {0: c} if c else {})

    def x(self, i: int) -> "WeylElement":
        return generator(self, "variable", i)

    def D(self, i: int) -> "WeylElement":
        return generator(self, "derivative", i)

    def param(self, i: int) -> "WeylElement":
        """Central parameter d_i."""
        self._check_index(i)
        return WeylElement(self, {1 << (P_SHIFT + FIELD_BITS * (i - 1)): 1})

    def monomial(self, xexp: Sequence[int], dexp: Sequence[int] | None = None,
                 coeff: int = 1) -> "WeylElement":
        dexp = dexp if dexp is not None else (0,) * self.n
        if len(xexp) != self.n or len(dexp) != self.n:
            raise ValueError("exponent vector length does not match rank")
        return WeylElement(self, {pack(xexp) | pack(dexp, D_SHIFT): coeff} if coeff else {})


class WeylElement:
    """Immutable element of a :class:`WeylAlgebra`.

    ``terms`` maps packed keys (see module docstring) to nonzero ints.
    Group the keys by their lower 128 bits to get the Weyl monomial and its
    coefficient polynomial in the central parameters.
    """

    __slots__ = ("alg", "terms", "_hash")

    def __init__(self, alg: WeylAlgebra, terms: Mapping[int, int], _canonical: bool = False):
        self.alg = alg
        self.terms = dict(terms) if _canonical else {k: c for k, c in terms.items() if c}
        self._hash = None

    @property
    def n(self) -> int:
        return self.alg.n

    def _same(self, other: "WeylElement") -> None:
        if other.alg is not self.alg:
            raise ContextError(f"rank {self.n} vs rank {other.n}")

    def _coerce(self, other) -> "WeylElement":
        if isinstance(other, int):
            return self.alg.scalar(other)
        if isinstance(other, WeylElement):
            self._same(other)
            return other
        return NotImplemented

    def __bool__(self):
        return bool(self.terms)

    def __len__(self):
        return len(self.terms)

    def __eq__(self, other):
        if isinstance(other, int):
            other = self.alg.scalar(other)
        if not isinstance(other, WeylElement):
            return NotImplemented
        return self.alg is other.alg and self.terms == other.terms

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.n, frozenset(self.terms.items())))
        return self._hash

    def __neg__(self):
        return WeylElement(self.alg, {k: -c for k, c in self.terms.items()}, True)

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return add(self, -other)

    def __rsub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return add(other, -self)

    def __mul__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return mul(self, other)

    def __rmul__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return mul(other, self)

    def __pow__(self, k: int):
        out = self.alg.one()
        for _ in range(k):
            out = mul(out, self)
        return out

    # -- inspection ---------------------------------------------------------

    def is_constant_coeff(self) -> bool:
        """True when no term depends on a central parameter."""
        return all(k >> P_SHIFT == 0 for k in self.terms)

    def is_commutative_polynomial(self) -> bool:
        return all(k >> D_SHIFT == 0 for k in self.terms)

    def coefficients(self) -> dict[Monomial, dict[tuple[int, ...], int]]:
        """Monomial -> {d-exponent vector: int} view."""
        out: dict[Monomial, dict[tuple[int, ...], int]] = {}
        n = self.n
        for k, c in self.terms.items():
            mono = Monomial.from_key(k & ((1 << P_SHIFT) - 1), n)
            out.setdefault(mono, {})[unpack(k >> P_SHIFT, n)] = c
        return out

    def max_degree(self) -> int:
        return max((Monomial.from_key(k, self.n).degree for k in self.terms), default=0)

    def sorted_terms(self) -> list[tuple[Monomial, tuple[int, ...], int]]:
        n = self.n
        rows = []
        for k, c in self.terms.items():
            mono = Monomial.from_key(k & ((1 << P_SHIFT) - 1), n)
            rows.append((mono, unpack(k >> P_SHIFT, n), c))
        rows.sort(key=lambda r: (r[0].sort_key(), sum(r[1]), r[1]))
        return rows

    def __str__(self):
        return to_text(self)

    def __repr__(self):
        return f"WeylElement(n={self.n}, {to_text(self)})"


def generator(alg: WeylAlgebra, kind: str, i: int) -> WeylElement:
    alg._check_index(i)
    shift = {"variable": X_SHIFT, "derivative": D_SHIFT}.get(kind)
    if shift is None:
        raise ValueError(f"unknown generator kind {kind!r}")
    return WeylElement(alg, {1 << (shift + FIELD_BITS * (i - 1)): 1}, True)


def add(a: WeylElement, b: WeylElement) -> WeylElement:
    a._same(b)
    if len(a.terms) < len(b.terms):
        a, b = b, a
    out = dict(a.terms)
    for k, c in b.terms.items():
        s = out.get(k, 0) + c
        if s:
            out[k] = s
        else:
            del out[k]
    return WeylElement(a.alg, out, True)


def add_many(items: Iterable[WeylElement], alg: WeylAlgebra) -> WeylElement:
    """Sum of many elements with a single accumulator.

    The result does not depend on the order of ``items``.
    """
    out: dict[int, int] = {}
    for w in items:
        if w.alg is not alg:
            raise ContextError(f"rank {w.n} vs rank {alg.n}")
        for k, c in w.terms.items():
            out[k] = out.get(k, 0) + c
    return WeylElement(alg, out)


def mul_into(acc: dict[int, int], a: WeylElement, b: WeylElement, scale: int = 1) -> None:
    """``acc += scale * a * b`` on raw term dicts; zeros are left in ``acc``."""
    bsupp = {}
    for kb in b.terms:
        bsupp[kb] = _support(kb & BLOCK_MASK)
    get = acc.get
    for ka, ca in a.terms.items():
        ca *= scale
        da = (ka >> D_SHIFT) & BLOCK_MASK
        dsupp = _support(da) if da else 0
        for kb, cb in b.terms.items():
            if dsupp & bsupp[kb]:
                base = ka + kb
                c = ca * cb
                for down, m in _reorder(da, kb & BLOCK_MASK):
                    k = base - down
                    acc[k] = get(k, 0) + c * m
            else:
                k = ka + kb
                acc[k] = get(k, 0) + ca * cb


def mul(a: WeylElement, b: WeylElement) -> WeylElement:
    """Normal-ordered product ``a * b``."""
    a._same(b)
    acc: dict[int, int] = {}
    mul_into(acc, a, b)
    return WeylElement(a.alg, acc)


def apply(w: WeylElement, p: WeylElement) -> WeylElement:
    """Act with the operator ``w`` on the commutative polynomial ``p``."""
    w._same(p)
    if not w.is_constant_coeff():
        raise ValueError("operator has parameter-dependent coefficients")
    if not p.is_commutative_polynomial():
        raise ValueError("operand is not a commutative polynomial")
    n = w.n
    out: dict[int, int] = {}
    pterms = [(k, unpack(k, n), c) for k, c in p.terms.items()]
    for kw, cw in w.terms.items():
        xa = kw & BLOCK_MASK
        db = unpack(kw >> D_SHIFT, n)
        dkey = pack(db)
        for kp, e, cp in pterms:
            m = 1
            for ei, bi in zip(e, db):
                if bi > ei:
                    m = 0
                    break
                for t in range(bi):
                    m *= ei - t
            if m:
                k = kp - dkey + xa
                out[k] = out.get(k, 0) + cw * cp * m
    return WeylElement(w.alg, out)


def substitute_diag(w: WeylElement, values: Sequence[int]) -> WeylElement:
    """Evaluate every central parameter d_i at ``values[i-1]``."""
    n = w.n
    if len(values) != n:
        raise ValueError(f"expected {n} values, got {len(values)}")
    out: dict[int, int] = {}
    low = (1 << P_SHIFT) - 1
    for k, c in w.terms.items():
        pk = k >> P_SHIFT
        if pk:
            for v, e in zip(values, unpack(pk, n)):
                if e:
                    c *= v ** e
            if not c:
                continue
            k &= low
        out[k] = out.get(k, 0) + c
    return WeylElement(w.alg, out)


def _factor_text(name: str, exps: Sequence[int]) -> list[str]:
    return [f"{name}{i + 1}^{e}" for i, e in enumerate(exps) if e]


def to_text(w: WeylElement) -> str:
    """Deterministic text form, graded-lex term order.

    Grammar: terms separated by spaces; each term is ``[+-]coeff`` followed
    by ``*p<i>^<e>`` (central parameters), ``*x<i>^<e>`` and ``*D<i>^<e>``
    factors in that order.  The zero element prints as ``0``.
    """
    if not w.terms:
        return "0"
    parts = []
    for mono, pexp, c in w.sorted_terms():
        factors = _factor_text("p", pexp) + _factor_text("x", mono.xexp) + _factor_text("D", mono.dexp)
        parts.append(("+" if c > 0 else "-") + str(abs(c)) + "".join("*" + f for f in factors))
    return " ".join(parts)


def from_text(alg: WeylAlgebra, text: str) -> WeylElement:
    """Inverse of :func:`to_text`."""
    text = text.strip()
    if text == "0":
        return alg.zero()
    terms: dict[int, int] = {}
    shifts = {"x": X_SHIFT, "D": D_SHIFT, "p": P_SHIFT}
    for tok in text.split():
        head, *factors = tok.split("*")
        c = int(head)
        k = 0
        for f in factors:
            name, e = f[0], int(f.split("^")[1])
            i = int(f[1:].split("^")[0])
            alg._check_index(i)
            k += e << (shifts[name] + FIELD_BITS * (i - 1))
        terms[k] = terms.get(k, 0) + c
    return WeylElement(alg, terms)
