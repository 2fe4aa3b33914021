import numpy as np
import pytest
from hypothesis import strategies as st

from cklpe.bounds import lower_bound_model


def random_policy_set(gen, n, k, alpha=1.0):
    """Dirichlet rows, all strictly positive."""
    return gen.dirichlet(np.full(k, alpha), size=n)


@st.composite
def policy_sets(draw, max_n=20, max_k=10):
    n = draw(st.integers(1, max_n))
    k = draw(st.integers(2, max_k))
    seed = draw(st.integers(0, 2**32 - 1))
    alpha = draw(st.sampled_from([0.3, 1.0, 5.0]))
    return random_policy_set(np.random.default_rng(seed), n, k, alpha)


@pytest.fixture
def lb4():
    return lower_bound_model(4, 1.0)


ACCEPTANCE_LINES = []


def record_criterion(number, passed, summary):
    line = f"criterion {number}: {'PASS' if passed else 'FAIL'} - {summary}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
