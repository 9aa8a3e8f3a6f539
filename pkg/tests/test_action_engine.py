import os

import numpy as np
import pytest
from hypothesis import given, strategies as st

from capelli import kernels
from capelli.action_engine import (BudgetExceeded, EngineStats, ExactProgress, choose_moduli,
                                   chunk_columns, coldet_apply, evaluate_residual, lhs_apply,
                                   residual_polynomial, verify_exact)
from capelli.bench import synthetic_operators
from capelli.capelli_verifier import QUATERNION_DIAGS, identity_operators, lhs, rhs
from capelli.division_algebra import QUATERNION_PAPER, load_builtin
from capelli.graded import PRIMES, build_operator, graded_space, polynomial_to_vector, space_dim
from capelli.weyl_core import WeylAlgebra, apply

from conftest import elements, polynomials


@pytest.fixture
def numpy_kernels(monkeypatch):
    monkeypatch.setenv(kernels.DISABLE_ENV, "1")


def test_space_dims():
    for n in range(1, 6):
        for m in range(5):
            assert graded_space(n, m).dim == space_dim(n, m)
    assert space_dim(8, 8) == 6435


def test_primes_are_prime_and_below_bound():
    import sympy
    assert all(sympy.isprime(p) and p < kernels.MAX_MODULUS for p in PRIMES)
    assert sympy.prevprime(1 << 28) == PRIMES[0]


@given(st.integers(1, 3).flatmap(lambda n: st.tuples(elements(n, max_degree=3), polynomials(n))),
       st.integers(0, 4))
def test_operator_matrix_matches_apply(wp, m):
    w, p = wp
    # split w into parts of constant degree shift, compare on the degree-m part of p
    parts = {}
    for mono, _, c in w.sorted_terms():
        s = sum(mono.xexp) - sum(mono.dexp)
        parts[s] = parts.get(s, w.alg.zero()) + w.alg.monomial(mono.xexp, mono.dexp, c)
    vm = polynomial_to_vector(p, m)
    pm = sum((w.alg.monomial(e.tolist()) * int(c)
              for e, c in zip(graded_space(w.n, m).exps, vm) if c), w.alg.zero())
    for s, part in parts.items():
        op = build_operator(part, m)
        if op.dst < 0 or m + s < 0:
            continue
        got = op.data.astype(object)
        out = np.zeros(space_dim(w.n, op.dst), dtype=object)
        for r in range(len(op.indptr) - 1):
            for t in range(op.indptr[r], op.indptr[r + 1]):
                out[r] += int(op.data[t]) * vm[op.indices[t]]
        assert out.tolist() == polynomial_to_vector(apply(part, pm), op.dst).tolist()
        assert got is not None


@pytest.mark.parametrize("p", [0, PRIMES[0]])
def test_numba_and_numpy_agree(p, monkeypatch):
    ops = identity_operators(QUATERNION_PAPER)
    rng = np.random.default_rng(1)
    x = rng.integers(0, p or 1000, size=(space_dim(4, 3), 5), dtype=np.int64)
    outs = []
    for flag in ("0", "1"):
        monkeypatch.setenv(kernels.DISABLE_ENV, flag)
        outs.append(coldet_apply(ops, 3, x, p, None))
    assert outs[0].keys() == outs[1].keys()
    for k in outs[0]:
        assert np.array_equal(outs[0][k], outs[1][k])


def test_disable_flag():
    old = os.environ.get(kernels.DISABLE_ENV)
    try:
        os.environ[kernels.DISABLE_ENV] = "1"
        assert not kernels.numba_enabled()
        os.environ[kernels.DISABLE_ENV] = "0"
        assert kernels.numba_enabled() == kernels.HAVE_NUMBA
    finally:
        if old is None:
            os.environ.pop(kernels.DISABLE_ENV, None)
        else:
            os.environ[kernels.DISABLE_ENV] = old


def test_modulus_guard():
    with pytest.raises(ValueError):
        kernels.axpy_acc(np.zeros((1, 1), np.int64), np.zeros((1, 1), np.int64), 1 << 29, 1)


def exact_action(w, deg):
    """Dense exact matrix of w on V_deg, via symbolic application."""
    alg = w.alg
    space = graded_space(alg.n, deg)
    cols = [polynomial_to_vector(apply(w, alg.monomial(e.tolist())), deg) for e in space.exps]
    return np.array(cols, dtype=object).T


@pytest.mark.parametrize("diag", list(QUATERNION_DIAGS) + [(0, 0, 0, 0), (2, 0, 0, 2)])
def test_dual_route_quaternion(diag):
    # the graded DP equals the symbolic column-determinant acting on every V_m
    t = QUATERNION_PAPER
    ops = identity_operators(t)
    sym = rhs(t, diag)
    left = lhs(t)
    for deg in ops.degrees():
        dim = space_dim(4, deg)
        x = np.eye(dim, dtype=np.int64)
        got = coldet_apply(ops, deg, x, 0, diag)[0]
        assert got.tolist() == exact_action(sym, deg).tolist()
        assert lhs_apply(ops, deg, x, 0).tolist() == exact_action(left, deg).tolist()
    prog = verify_exact(ops, diag)
    assert prog.holds == (sym == left)


def test_symbolic_residual_polynomial_matches_concrete():
    ops = identity_operators(QUATERNION_PAPER)
    p = PRIMES[1]
    cands = np.array([[2, 0, 0, -2], [0, 0, 0, 0], [1, 2, 3, 4], [2, 0, 0, 2]])
    for deg in ops.degrees():
        coeffs = residual_polynomial(ops, deg, p, seed=3)
        vals = evaluate_residual(coeffs, cands, p)
        # recompute with concrete diagonals and the same random vectors
        rng = np.random.default_rng([3, deg, p])
        dim = space_dim(4, deg)
        v = rng.integers(0, p, size=(dim, 1), dtype=np.int64)
        w = rng.integers(0, p, size=(1, dim), dtype=np.int64)
        for c, val in zip(cands, vals):
            res = (lhs_apply(ops, deg, v, p) - coldet_apply(ops, deg, v, p, list(c))[0]) % p
            assert int(sum(int(a) * int(b) for a, b in zip(w[0], res[:, 0])) % p) == int(val)
    assert evaluate_residual(residual_polynomial(ops, 1, p, 0), cands[:1], p)[0] == 0


def test_choose_moduli():
    assert choose_moduli(1e13) == (0,)
    ms = choose_moduli(1e20)
    assert ms == PRIMES[:3]
    assert float(np.prod([float(p) for p in ms])) > 2e20 > float(ms[0]) * ms[1]
    with pytest.raises(OverflowError):
        choose_moduli(1e100)


def test_crt_path_agrees_with_exact():
    ops = identity_operators(QUATERNION_PAPER)
    for diag in [(2, 0, 0, -2), (0, 0, 0, 0)]:
        exact = verify_exact(ops, diag)
        prog = ExactProgress(moduli=PRIMES[:2], bound=1.0)
        modular = verify_exact(ops, diag, progress=prog)
        assert modular.holds == exact.holds
        if not exact.holds:
            assert modular.witness["residual"] % PRIMES[0] == exact.witness["residual"] % PRIMES[0]


def test_chunking_and_budget():
    assert chunk_columns(4, 4, None) == 35
    assert chunk_columns(4, 4, 4000) == 1
    with pytest.raises(BudgetExceeded):
        chunk_columns(8, 8, 1000)
    ops = identity_operators(QUATERNION_PAPER)
    calls = []
    prog = verify_exact(ops, (2, 0, 0, -2), mem_cap=4000, on_chunk=lambda p: calls.append(p.column))
    expected = sum(-(-space_dim(4, m) // chunk_columns(4, m, 4000)) for m in range(5))
    assert prog.holds and len(calls) == expected > 35


def test_resume_from_progress():
    ops = identity_operators(QUATERNION_PAPER)
    saved = []

    class Stop(Exception):
        pass

    def hook(p):
        saved.append(p.to_dict())
        if len(saved) == 20:
            raise Stop

    with pytest.raises(Stop):
        verify_exact(ops, (2, 0, -2, 0), mem_cap=4000, on_chunk=hook)
    prog = ExactProgress.from_dict(saved[-1])
    assert not prog.done and prog.degree > 0
    assert verify_exact(ops, (2, 0, -2, 0), mem_cap=4000, progress=prog).holds


def test_synthetic_six():
    ops = synthetic_operators(6)
    stats = EngineStats()
    x = np.ones((space_dim(6, 2), 1), dtype=np.int64)
    out = coldet_apply(ops, 2, x, PRIMES[0], [1, 0, 0, 0, 0, -1], stats)
    assert 0 in out and stats.spmm_calls > 0
