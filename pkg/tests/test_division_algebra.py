import numpy as np
import pytest
from hypothesis import given, strategies as st

from capelli.capelli_verifier import build_a_matrix, left_mult_matrix
from capelli.division_algebra import (BUILTIN_TABLES, QUATERNION_PAPER, Relabeling, TableError,
                                      TableMatrix, apply_relabeling, basis_sign_flip, build_algebra,
                                      check_alternative, check_anticommutation, check_properties,
                                      check_skew_products, commutator_identity, enumerate_admissible,
                                      extract_u, is_associative, is_normalized, k_matrix, load_builtin,
                                      norm_multiplicative, normalize, orthogonal_rows, parse_table,
                                      quadratic_form_vanishes, skew_products, table_to_text,
                                      triple_sign)
from capelli.weyl_core import WeylAlgebra

OCTONION = load_builtin("octonion-standard")
TABLES_4 = enumerate_admissible(4, normalized_only=False)


def corrupt(t, i, j):
    rows = [list(r) for r in t.entries]
    rows[i][j] = -rows[i][j]
    return TableMatrix(tuple(map(tuple, rows)))


def test_paper_table_properties():
    rep = check_properties(QUATERNION_PAPER)
    assert rep.prop_i and rep.prop_ii and rep.prop_iii and not rep.violations
    assert is_normalized(QUATERNION_PAPER)
    # rows {1,2} x cols {1,2}: a = d = -x1 forces b = -c
    sub = QUATERNION_PAPER.as_array()[:2, :2]
    assert sub.tolist() == [[-1, 2], [-2, -1]]


def test_repeated_row_entry_fails_signed_permutation():
    t = TableMatrix(((1, 1, 3, 4), (-2, -1, 4, -3), (-3, -4, -1, 2), (-4, 3, -2, -1)))
    rep = check_properties(t)
    assert not rep.prop_i and not rep.admissible


def test_violations_name_the_submatrix():
    rep = check_properties(corrupt(QUATERNION_PAPER, 1, 2))
    assert not rep.prop_ii
    assert any("2x2 submatrix" in v for v in rep.violations)


def test_builtins_validate():
    for name, t in BUILTIN_TABLES.items():
        assert check_properties(t).admissible, name
        assert is_normalized(t), name
    with pytest.raises(TableError):
        load_builtin("sedenion")


def test_build_algebra_quaternion():
    alg = build_algebra(QUATERNION_PAPER)
    assert alg.basis_product(2, 3) == (1, 4)
    for j in range(1, 5):
        assert alg.basis_product(1, j) == (1, j) == alg.basis_product(j, 1)
    for i in range(2, 5):
        assert alg.basis_product(i, i) == (-1, 1)
    assert is_associative(alg)


def test_build_algebra_real():
    alg = build_algebra(load_builtin("real"))
    assert alg.basis_product(1, 1) == (1, 1)


def test_build_algebra_refuses_unnormalized_without_flag():
    t = apply_relabeling(QUATERNION_PAPER, Relabeling((1, 3, 2, 4)))
    assert not is_normalized(t)
    assert np.array_equal(build_algebra(t).structure_constants(),
                          build_algebra(normalize(t)[0]).structure_constants())
    with pytest.raises(TableError):
        build_algebra(t, auto_normalize=False)


def test_table_is_minus_left_multiplication():
    # column j of the table, read in the algebra it defines, is -(alpha e_j)
    for t in (QUATERNION_PAPER, OCTONION, load_builtin("complex-standard"), load_builtin("real")):
        alg = build_algebra(t)
        w = WeylAlgebra(t.n)
        lm = left_mult_matrix(alg, [w.x(i) for i in range(1, t.n + 1)])
        assert build_a_matrix(t) == lm.map(lambda e: -e)


def test_normalize_fixed_point():
    t, rel = normalize(QUATERNION_PAPER)
    assert t == QUATERNION_PAPER
    assert rel == Relabeling((1, 2, 3, 4))


def test_normalize_restores_relabeled_table():
    # x2 -> -x2 turns the first row into [-x1, -x2, x3, x4]
    moved = apply_relabeling(QUATERNION_PAPER, Relabeling((1, -2, 3, 4)))
    assert not is_normalized(moved)
    t, rel = normalize(moved)
    assert t == QUATERNION_PAPER
    assert apply_relabeling(moved, rel) == t


def test_normalize_positive_diagonal():
    neg = TableMatrix(tuple(tuple(-v for v in r) for r in QUATERNION_PAPER.entries))
    assert neg[0, 0] == 1 and check_properties(neg).admissible
    t, rel = normalize(neg)
    assert rel.negate and is_normalized(t) and t[0, 0] == -1
    assert check_properties(t).admissible


def test_normalize_rejects_inadmissible():
    with pytest.raises(TableError):
        normalize(corrupt(QUATERNION_PAPER, 1, 2))


@pytest.mark.parametrize("name", sorted(BUILTIN_TABLES))
def test_norm_multiplicative_builtins(name):
    assert norm_multiplicative(build_algebra(load_builtin(name)), trials=200)


def test_norm_identity_element():
    alg = build_algebra(QUATERNION_PAPER)
    b = [3, -1, 2, 5]
    assert alg.multiply([1, 0, 0, 0], b) == b


def test_corrupted_structure_constants_break_norm():
    alg = build_algebra(QUATERNION_PAPER)
    alg.sign[2, 3] = -alg.sign[2, 3]
    assert not norm_multiplicative(alg, trials=20)


def test_extract_u_quaternion():
    u2 = extract_u(QUATERNION_PAPER, 2)
    # column 2 is (x2, -x1, -x4, x3)
    assert u2.tolist() == [[0, 1, 0, 0], [-1, 0, 0, 0], [0, 0, 0, -1], [0, 0, 1, 0]]
    for t in (QUATERNION_PAPER, OCTONION):
        for i in range(2, t.n + 1):
            u = extract_u(t, i)
            assert np.array_equal(u.T, -u)
            assert np.array_equal(u @ u, -np.eye(t.n, dtype=np.int64))


def test_k_matrix():
    assert np.diag(k_matrix(4, 2)).tolist() == [1, 1, -1, -1]
    assert np.diag(k_matrix(8, 5)).tolist() == [1, -1, -1, -1, 1, -1, -1, -1]


def test_lemma_checks_builtins():
    for t in (QUATERNION_PAPER, OCTONION):
        assert check_anticommutation(t)
        assert check_skew_products(t)


def test_corrupted_u_fails_anticommutation():
    # swap the signs of one 2-cycle of U_2: still skew and orthogonal, no longer anticommuting
    rows = [list(r) for r in QUATERNION_PAPER.entries]
    rows[2][1], rows[3][1] = -rows[2][1], -rows[3][1]
    t = TableMatrix(tuple(map(tuple, rows)))
    assert not check_anticommutation(t)


def test_skew_quadratic_forms():
    for t in (QUATERNION_PAPER, OCTONION):
        for m in skew_products(t).values():
            assert quadratic_form_vanishes(m, trials=100)
            bumped = m.copy()
            bumped[0, 0] += 1
            assert not quadratic_form_vanishes(bumped, trials=100)


def test_commutator_identity_vanishes():
    for t in (QUATERNION_PAPER, OCTONION):
        for i in range(2, t.n + 1):
            for j in range(i + 1, t.n + 1):
                assert not commutator_identity(t, i, j).any()


def test_orthogonal_rows_example():
    assert orthogonal_rows(QUATERNION_PAPER, [1, 2, -3, 5])


def test_octonion_is_alternative_not_associative():
    alg = build_algebra(OCTONION)
    assert check_alternative(alg)
    assert not is_associative(alg)
    assert check_alternative(build_algebra(QUATERNION_PAPER))


def test_sedenion_like_table_fails():
    # Cayley-Dickson doubling signs applied to the wrong line break the pairing rule
    t = corrupt(OCTONION, 2, 5)
    assert not check_properties(t).prop_ii


def test_triple_sign():
    assert triple_sign(QUATERNION_PAPER) == -1
    assert triple_sign(basis_sign_flip(QUATERNION_PAPER, 4)) == 1
    with pytest.raises(TableError):
        triple_sign(OCTONION)


def test_enumeration_counts():
    assert [t.entries for t in enumerate_admissible(1)] == [((-1,),)]
    assert len(enumerate_admissible(2)) == 1
    assert enumerate_admissible(3) == []
    assert enumerate_admissible(3, normalized_only=False) == []
    normalized = enumerate_admissible(4)
    assert len(normalized) == 2
    assert QUATERNION_PAPER in normalized
    assert len(TABLES_4) == 768
    with pytest.raises(ValueError):
        enumerate_admissible(6)


def test_enumeration_is_sorted():
    assert [t.entries for t in TABLES_4] == sorted(t.entries for t in TABLES_4)


def test_every_enumerated_table_is_a_division_algebra():
    for t in TABLES_4:
        assert check_properties(t).admissible
        nt, _ = normalize(t)
        alg = build_algebra(nt)
        assert norm_multiplicative(alg, trials=20)
        assert check_anticommutation(nt)


def test_text_round_trip():
    for t in BUILTIN_TABLES.values():
        assert parse_table(table_to_text(t)) == t
    assert parse_table("# comment\n2\n-1, 2\n-2 -1  # row\n") == load_builtin("complex-standard")
    for bad in ("", "2\n-1 2\n", "2\n-1 x\n-2 -1\n", "2\n-1 3\n-2 -1\n", "2\n-1 2 1\n-2 -1\n"):
        with pytest.raises(TableError):
            parse_table(bad)


@given(st.sampled_from(TABLES_4), st.integers(1, 4))
def test_sign_flip_preserves_admissibility(t, k):
    flipped = basis_sign_flip(t, k)
    assert check_properties(flipped).admissible
    assert basis_sign_flip(flipped, k) == t
