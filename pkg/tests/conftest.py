import random

import pytest
from hypothesis import settings, strategies as st

from capelli.weyl_core import WeylAlgebra

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")


@st.composite
def elements(draw, n, max_terms=5, max_degree=3, params=False):
    alg = WeylAlgebra(n)
    acc = alg.zero()
    for _ in range(draw(st.integers(0, max_terms))):
        deg = draw(st.integers(0, max_degree))
        xe, de = [0] * n, [0] * n
        for _ in range(deg):
            i = draw(st.integers(0, n - 1))
            (xe if draw(st.booleans()) else de)[i] += 1
        term = alg.monomial(xe, de) * draw(st.integers(-4, 4))
        if params:
            for i in range(1, n + 1):
                if draw(st.booleans()):
                    term = alg.param(i) * term
        acc = acc + term
    return acc


@st.composite
def polynomials(draw, n, max_terms=4, max_degree=4):
    alg = WeylAlgebra(n)
    acc = alg.zero()
    for _ in range(draw(st.integers(0, max_terms))):
        xe = [0] * n
        for _ in range(draw(st.integers(0, max_degree))):
            xe[draw(st.integers(0, n - 1))] += 1
        acc = acc + alg.monomial(xe) * draw(st.integers(-4, 4))
    return acc


@pytest.fixture
def rng():
    return random.Random(20240611)


def pytest_terminal_summary(terminalreporter):
    """One pass/fail line per acceptance criterion."""
    lines = []
    for outcome in ("passed", "failed", "error"):
        for rep in terminalreporter.stats.get(outcome, []):
            if getattr(rep, "when", "call") != "call" and outcome != "error":
                continue
            name = rep.nodeid.split("::")[-1]
            if "test_acceptance.py" in rep.nodeid and name.startswith("test_criterion_"):
                num = int(name.split("_")[2])
                lines.append((num, name, "PASS" if outcome == "passed" else "FAIL"))
    if lines:
        terminalreporter.write_sep("=", "acceptance criteria")
        for num, name, verdict in sorted(lines):
            terminalreporter.write_line(f"criterion {num}: {verdict}  ({name})")
