"""Both sides of the Capelli-type norm identities, diagonal search, action checks.

For a table matrix A (entries +-x_k) let B be its transpose with every x_k
replaced by D_k.  The identity under test is

    det(A) det(B) == cdet(A B + diag)

with cdet the column-determinant.  Small tables (n <= 4) are handled with
explicit symbolic Weyl-algebra arithmetic; larger ones go through the
graded action engine (:mod:`capelli.action_engine`).
"""
from __future__ import annotations

import json
import logging
import os
import time
from dataclasses import dataclass, field
from itertools import permutations
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__
from .action_engine import (EngineStats, ExactProgress, IdentityOperators, evaluate_residual,
                            residual_polynomial, verify_exact)
from .division_algebra import (DivisionAlgebraTable, TableMatrix, TableError, build_algebra,
                               check_properties, is_normalized)
from .graded import PRIMES
from .nc_matrix import (DetStats, WeylMatrix, add_diag, column_det, mat_mul, transpose_substitute)
from .weyl_core import WeylAlgebra, WeylElement, apply, substitute_diag, to_text

log = logging.getLogger(__name__)

WEYL_ENGINE_MAX_N = 4
RESIDUAL_SAMPLE = 5
CHECKPOINT_VERSION = 1

# Reference diagonals for n = 4 (positional, 1-based diagonal entries)
QUATERNION_DIAGS = ((2, 0, 0, -2), (2, 0, -2, 0), (0, 2, 0, -2))
QUATERNION_MULTISET = (2, 0, 0, -2)
OCTONION_MULTISET = (6, 4, 2, 0, 0, -2, -4, -6)


def _require_admissible(t: TableMatrix) -> None:
    rep = check_properties(t)
    if not rep.admissible:
        raise TableError("table is not admissible: " + "; ".join(rep.violations[:3]))


def build_a_matrix(t: TableMatrix) -> WeylMatrix:
    """The table read as a matrix of signed variables."""
    _require_admissible(t)
    alg = WeylAlgebra(t.n)
    xs = [alg.x(i) for i in range(1, t.n + 1)]
    return WeylMatrix([[xs[abs(v) - 1] if v > 0 else -xs[abs(v) - 1] for v in row]
                       for row in t.entries])


def build_b_matrix(t: TableMatrix) -> WeylMatrix:
    return transpose_substitute(build_a_matrix(t))


def left_mult_matrix(alg: DivisionAlgebraTable, coords: Sequence[WeylElement]) -> WeylMatrix:
    """Matrix of left multiplication by sum coords[i] e_i: column j is the image of e_j."""
    n = alg.n
    zero = coords[0].alg.zero()
    rows = [[zero] * n for _ in range(n)]
    for i in range(n):
        for j in range(n):
            s, k = alg.basis_product(i + 1, j + 1)
            rows[k - 1][j] = rows[k - 1][j] + (coords[i] if s > 0 else -coords[i])
    return WeylMatrix(rows)


def algebra_product_matrix(t: TableMatrix) -> WeylMatrix:
    """Matrix of L_{alpha conj(beta)} = sum_ij x_i D_j L_{e_i conj(e_j)}.

    Coincides with ``A B`` for associative algebras; for the octonions it
    is a different (experimental) candidate for the right-hand side.
    """
    if not is_normalized(t):
        raise TableError("algebra product mode needs a normalized table")
    alg = build_algebra(t)
    n = t.n
    w = WeylAlgebra(n)
    zero = w.zero()
    coeff = [zero] * n
    for i in range(n):
        for j in range(n):
            # conj(e_j) = e_j for j = 1, -e_j otherwise
            s, k = alg.basis_product(i + 1, j + 1)
            if j:
                s = -s
            term = w.x(i + 1) * w.D(j + 1)
            coeff[k - 1] = coeff[k - 1] + (term if s > 0 else -term)
    return left_mult_matrix(alg, coeff)


def product_matrix(t: TableMatrix, mode: str = "matrix") -> WeylMatrix:
    """The matrix whose column-determinant forms the right-hand side.

    ``matrix``: A B.  ``algebra``: L_{alpha conj(beta)}.  ``conjugate``:
    B^T A^T, the reading of "conjugate of AB" used for the sign-flipped
    variant (experimental).
    """
    if mode == "matrix":
        return mat_mul(build_a_matrix(t), build_b_matrix(t))
    if mode == "algebra":
        return algebra_product_matrix(t)
    if mode == "conjugate":
        return mat_mul(build_b_matrix(t).transpose(), build_a_matrix(t).transpose())
    raise ValueError(f"unknown product mode {mode!r}")


def det_a(t: TableMatrix) -> WeylElement:
    return column_det(build_a_matrix(t))


def det_b(t: TableMatrix) -> WeylElement:
    return column_det(build_b_matrix(t))


def lhs(t: TableMatrix, mode: str = "matrix") -> WeylElement:
    """det(A) det(B); det(B) det(A) for the ``conjugate`` variant.

    Entries of A (resp. B) commute, so their column-determinants are
    ordinary determinants.
    """
    a, b = det_a(t), det_b(t)
    return b * a if mode == "conjugate" else a * b


def rhs(t: TableMatrix, d: Sequence[int] | str, *, mode: str = "matrix", order: str = "column",
        stats: DetStats | None = None) -> WeylElement:
    """cdet(M + diag); ``d="symbolic"`` keeps the diagonal as parameters d_i."""
    return column_det(add_diag(product_matrix(t, mode), d), order=order, stats=stats)


def default_engine(t: TableMatrix) -> str:
    return "weyl" if t.n <= WEYL_ENGINE_MAX_N else "action"


def identity_operators(t: TableMatrix, mode: str = "matrix") -> IdentityOperators:
    if mode == "conjugate":
        raise ValueError("the action engine does not handle the conjugate variant")
    return IdentityOperators(product_matrix(t, mode), det_a(t), det_b(t))


# -- reports ---------------------------------------------------------------------------

@dataclass
class VerificationReport:
    table_name: str
    diag: list[int]
    identity_holds: bool
    residual_terms: int | None
    residual_sample: list[str]
    engine: str
    mode: str = "matrix"
    witness: dict | None = None
    elapsed_ms: float = 0.0
    peak_terms: int = 0
    threads: int = 1
    dp_layer_stats: list[int] = field(default_factory=list)
    residual: WeylElement | None = field(default=None, repr=False)

    TIMING_FIELDS = ("elapsed_ms", "threads")

    def to_dict(self) -> dict:
        return dict(table_name=self.table_name, diag=list(self.diag),
                    identity_holds=self.identity_holds, residual_terms=self.residual_terms,
                    residual_sample=self.residual_sample, engine=self.engine, mode=self.mode,
                    witness=self.witness, elapsed_ms=round(self.elapsed_ms, 3),
                    peak_terms=self.peak_terms, threads=self.threads,
                    dp_layer_stats=self.dp_layer_stats)


def _residual_sample(res: WeylElement) -> list[str]:
    rows = res.sorted_terms()[::-1][:RESIDUAL_SAMPLE]
    return [to_text(WeylElement(res.alg, {_key(m, p): c})) for m, p, c in rows]


def _key(mono, pexp) -> int:
    from .weyl_core import P_SHIFT, pack
    return mono.key | pack(pexp, P_SHIFT)


def verify_identity(t: TableMatrix, d: Sequence[int], *, name: str = "", engine: str = "auto",
                    mode: str = "matrix", order: str = "column", mem_cap: int | None = None,
                    threads: int = 1, checkpoint: Path | None = None,
                    stop_after: int | None = None) -> VerificationReport:
    """Residual LHS - RHS for one concrete diagonal."""
    _require_admissible(t)
    if len(d) != t.n:
        raise ValueError(f"diag has length {len(d)}, table has dimension {t.n}")
    d = [int(v) for v in d]
    engine = default_engine(t) if engine == "auto" else engine
    t0 = time.perf_counter()
    if engine == "weyl":
        stats = DetStats()
        res = lhs(t, mode) - rhs(t, d, mode=mode, order=order, stats=stats)
        rep = VerificationReport(name, d, not res.terms, len(res), _residual_sample(res), engine,
                                 mode, peak_terms=stats.peak_terms,
                                 dp_layer_stats=stats.layer_terms, residual=res)
    elif engine == "action":
        if order != "column":
            raise ValueError("the action engine computes column-determinants only")
        ops = identity_operators(t, mode)
        stats = EngineStats()
        config = dict(table=[list(r) for r in t.entries], diag=d, mode=mode)
        ck = Checkpoint(checkpoint, config)
        prog = ExactProgress.from_dict(ck.state["exact"]) if "exact" in ck.state else None
        chunks = 0

        def save(pr):
            nonlocal chunks
            ck.state["exact"] = pr.to_dict()
            ck.save()
            chunks += 1
            if stop_after is not None and chunks >= stop_after and not pr.done:
                raise Interrupted(f"stopped after {chunks} chunks")

        prog = verify_exact(ops, d, mem_cap=mem_cap, progress=prog, on_chunk=save, stats=stats)
        rep = VerificationReport(name, d, bool(prog.holds), None, [], engine, mode,
                                 witness=prog.witness, peak_terms=stats.peak_state_bytes // 8,
                                 dp_layer_stats=[stats.spmm_calls])
    else:
        raise ValueError(f"unknown engine {engine!r}")
    rep.elapsed_ms = (time.perf_counter() - t0) * 1e3
    rep.threads = threads
    return rep


# -- diag search ----------------------------------------------------------------------------

def distinct_permutations(multiset: Sequence[int]) -> list[tuple[int, ...]]:
    return sorted(set(permutations(int(v) for v in multiset)))


@dataclass
class SearchResult:
    table_name: str
    multiset: list[int]
    satisfying: list[tuple[int, ...]]
    candidates: int
    engine: str
    mode: str = "matrix"
    screened_out: int = 0
    exact: dict = field(default_factory=dict)
    elapsed_ms: float = 0.0
    threads: int = 1
    peak_terms: int = 0
    dp_layer_stats: list[int] = field(default_factory=list)

    def to_dict(self) -> dict:
        return dict(table_name=self.table_name, multiset=self.multiset,
                    satisfying=[list(d) for d in self.satisfying], candidates=self.candidates,
                    engine=self.engine, mode=self.mode, screened_out=self.screened_out,
                    exact=self.exact, elapsed_ms=round(self.elapsed_ms, 3), threads=self.threads,
                    peak_terms=self.peak_terms, dp_layer_stats=self.dp_layer_stats)


class Checkpoint:
    """JSON progress file for a resumable search; refuses foreign versions or configs."""

    def __init__(self, path: Path | None, config: dict):
        self.path = path
        self.config = config
        self.state: dict = {}
        if path is not None and path.exists():
            data = json.loads(path.read_text())
            if data.get("version") != CHECKPOINT_VERSION or data.get("artifact") != __version__:
                raise RuntimeError(f"checkpoint {path} was written by another version; refusing to resume")
            if data.get("config") != config:
                raise RuntimeError(f"checkpoint {path} belongs to a different run configuration")
            self.state = data["state"]
            log.info("resuming from checkpoint %s", path)

    def save(self) -> None:
        if self.path is None:
            return
        self.path.parent.mkdir(parents=True, exist_ok=True)
        tmp = self.path.with_suffix(".tmp")
        tmp.write_text(json.dumps(dict(version=CHECKPOINT_VERSION, artifact=__version__,
                                       config=self.config, state=self.state), sort_keys=True))
        os.replace(tmp, self.path)


class Interrupted(RuntimeError):
    """Raised by the test hook ``stop_after`` once the given number of chunks ran."""


def search_diag(t: TableMatrix, multiset: Sequence[int], *, name: str = "", engine: str = "auto",
                mode: str = "matrix", checkpoint: Path | None = None, mem_cap: int | None = None,
                seed: int = 0, threads: int = 1, stop_after: int | None = None) -> SearchResult:
    """All distinct permutations of ``multiset`` for which the identity holds, in lex order."""
    _require_admissible(t)
    if len(multiset) != t.n:
        raise ValueError(f"multiset has length {len(multiset)}, table has dimension {t.n}")
    cands = distinct_permutations(multiset)
    engine = default_engine(t) if engine == "auto" else engine
    t0 = time.perf_counter()
    if engine == "weyl":
        stats = DetStats()
        sym = rhs(t, "symbolic", mode=mode, stats=stats)
        left = lhs(t, mode)
        good = [c for c in cands if substitute_diag(sym, c) == left]
        result = SearchResult(name, list(multiset), good, len(cands), engine, mode,
                              screened_out=len(cands) - len(good), peak_terms=stats.peak_terms,
                              dp_layer_stats=stats.layer_terms)
    elif engine == "action":
        result = _search_action(t, cands, name, list(multiset), mode, checkpoint, mem_cap, seed,
                                stop_after)
    else:
        raise ValueError(f"unknown engine {engine!r}")
    result.elapsed_ms = (time.perf_counter() - t0) * 1e3
    result.threads = threads
    return result


def _search_action(t, cands, name, multiset, mode, checkpoint, mem_cap, seed, stop_after):
    ops = identity_operators(t, mode)
    config = dict(table=[list(r) for r in t.entries], multiset=multiset, mode=mode, seed=seed)
    ck = Checkpoint(checkpoint, config)
    st = ck.state
    stats = EngineStats()
    chunks = 0

    def tick():
        nonlocal chunks
        ck.save()
        chunks += 1
        if stop_after is not None and chunks >= stop_after:
            raise Interrupted(f"stopped after {chunks} chunks")

    arr = np.array(cands, dtype=np.int64)
    p = PRIMES[0]
    screen = st.setdefault("screen", {})
    for deg in ops.degrees():
        if str(deg) in screen:
            continue
        coeffs = residual_polynomial(ops, deg, p, seed, stats=stats)
        screen[str(deg)] = {str(k): v for k, v in sorted(coeffs.items())}
        tick()
    alive = np.ones(len(arr), dtype=bool)
    for deg in ops.degrees():
        coeffs = {int(k): v for k, v in screen[str(deg)].items()}
        alive &= evaluate_residual(coeffs, arr, p) == 0
    survivors = [tuple(int(v) for v in arr[i]) for i in np.flatnonzero(alive)]
    exact = st.setdefault("exact", {})
    for cand in survivors:
        key = ",".join(map(str, cand))
        prog = ExactProgress.from_dict(exact[key]) if key in exact else None
        if prog is not None and prog.done:
            continue

        def save(pr, key=key):
            exact[key] = pr.to_dict()
            tick()

        verify_exact(ops, cand, mem_cap=mem_cap, progress=prog, on_chunk=save, stats=stats)
    good = [c for c in survivors if exact[",".join(map(str, c))]["holds"]]
    details = {k: dict(holds=v["holds"], witness=v["witness"], moduli=v["moduli"])
               for k, v in sorted(exact.items())}
    return SearchResult(name, multiset, good, len(cands), "action", mode,
                        screened_out=len(cands) - len(survivors), exact=details,
                        peak_terms=stats.peak_state_bytes // 8, dp_layer_stats=[stats.spmm_calls])


# -- Triple-sign rule --------------------------------------------------------------

def sign_rule_diags(t: TableMatrix) -> list[tuple[int, ...]]:
    """The three n = 4 diagonals, negated when e_2 e_3 e_4 = -1."""
    from .division_algebra import triple_sign
    s = triple_sign(t)
    return [tuple(s * v for v in d) for d in QUATERNION_DIAGS]


# -- action diagnostics ----------------------------------------------------------------------

def scalar_factor(s: int) -> int:
    """(4s+6)(4s+4)^2(4s+2)."""
    return (4 * s + 6) * (4 * s + 4) ** 2 * (4 * s + 2)


@dataclass
class ActionCheck:
    s: int
    laplacian_ok: bool
    laplacian_factor: int
    diagonal_ok: bool
    off_diagonal_ok: bool

    @property
    def ok(self) -> bool:
        return self.laplacian_ok and self.diagonal_ok and self.off_diagonal_ok


def action_report(t: TableMatrix, s_values: Sequence[int] = (0, 1, 2, 3, 4)) -> list[ActionCheck]:
    """Act on powers of P = (x_1^2 + ... + x_4^2)^2 with det(B) and the entries of A B."""
    if t.n != 4:
        raise TableError("action report is defined for 4x4 tables")
    alg = WeylAlgebra(4)
    r2 = sum((alg.x(i) * alg.x(i) for i in range(1, 5)), alg.zero())
    P = r2 * r2
    db = det_b(t)
    ab = product_matrix(t)
    out = []
    for s in s_values:
        if s < 0:
            raise ValueError("s must be a natural number")
        ps = P ** s
        ps1 = ps * P
        lap = apply(db, ps1)
        k = scalar_factor(s)
        diag_ok = all(apply(ab[i, i], ps1) == ps1 * (4 * s + 4) for i in range(4))
        off_ok = all(not apply(ab[i, j], q).terms
                     for i in range(4) for j in range(4) if i != j for q in (P, P * P, ps1))
        out.append(ActionCheck(s, lap == ps * k, k, diag_ok, off_ok))
    return out
