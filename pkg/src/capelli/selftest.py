"""Quick oracle cross-checks, runnable from the CLI without pytest."""
from __future__ import annotations

import random

from .capelli_verifier import QUATERNION_DIAGS, action_report, verify_identity
from .division_algebra import (BUILTIN_TABLES, build_algebra, check_alternative,
                               check_anticommutation, check_skew_products, enumerate_admissible,
                               load_builtin, norm_multiplicative, normalize, quadratic_form_vanishes,
                               skew_products)
from .nc_matrix import WeylMatrix, brute_force_det, column_det
from .weyl_core import WeylAlgebra, WeylElement, apply


def random_element(rng: random.Random, alg: WeylAlgebra, terms: int = 3, degree: int = 2) -> WeylElement:
    acc = alg.zero()
    for _ in range(rng.randint(0, terms)):
        xe = [0] * alg.n
        de = [0] * alg.n
        for _ in range(rng.randint(0, degree)):
            (xe if rng.random() < 0.5 else de)[rng.randrange(alg.n)] += 1
        acc = acc + alg.monomial(xe, de) * rng.randint(-3, 3)
    return acc


def random_polynomial(rng: random.Random, alg: WeylAlgebra, terms: int = 3, degree: int = 3) -> WeylElement:
    acc = alg.zero()
    for _ in range(terms):
        xe = [0] * alg.n
        for _ in range(rng.randint(0, degree)):
            xe[rng.randrange(alg.n)] += 1
        acc = acc + alg.monomial(xe) * rng.randint(-3, 3)
    return acc


def random_matrix(rng: random.Random, n: int) -> WeylMatrix:
    alg = WeylAlgebra(n)
    return WeylMatrix([[random_element(rng, alg) for _ in range(n)] for _ in range(n)])


def _check(name: str, ok: bool, results: list) -> None:
    print(f"{'PASS' if ok else 'FAIL'}  {name}")
    results.append(ok)


def run_selftest(seed: int = 0) -> bool:
    rng = random.Random(seed)
    results: list[bool] = []
    _check("column_det matches permutation sum (60 matrices)",
           all(column_det(m) == brute_force_det(m)
               for m in (random_matrix(rng, rng.randint(1, 4)) for _ in range(60))), results)
    ok = True
    for _ in range(100):
        alg = WeylAlgebra(rng.randint(1, 3))
        a, b = random_element(rng, alg), random_element(rng, alg)
        p = random_polynomial(rng, alg)
        ok &= apply(a * b, p) == apply(a, apply(b, p))
    _check("operator product matches composed action (100 instances)", ok, results)
    for name in BUILTIN_TABLES:
        t, _ = normalize(load_builtin(name))
        alg = build_algebra(t)
        ok = (norm_multiplicative(alg, trials=50, seed=seed) and check_alternative(alg, seed=seed)
              and (t.n < 2 or (check_anticommutation(t) and check_skew_products(t, seed=seed)
                               and all(quadratic_form_vanishes(m, seed=seed)
                                       for m in skew_products(t).values()))))
        _check(f"lemma battery on {name}", ok, results)
    _check("admissible table counts n=1..4",
           [len(enumerate_admissible(n)) for n in (1, 2, 3, 4)] == [1, 1, 0, 2], results)
    q = load_builtin("quaternion-paper")
    _check("identity on the quaternion table with its three diagonals",
           all(verify_identity(q, d).identity_holds for d in QUATERNION_DIAGS), results)
    _check("zero diagonal is refuted", not verify_identity(q, (0, 0, 0, 0)).identity_holds, results)
    _check("action of the quartic powers s=0..2", all(c.ok for c in action_report(q, (0, 1, 2))),
           results)
    return all(results)
