import numpy as np
import pytest

from oqwalk.builders import build_cycle3_walk, build_rotation_pair, random_density
from oqwalk.model import block_rep

# (criterion, passed, detail) lines filled in by test_acceptance
ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def pair_model():
    return build_rotation_pair()


@pytest.fixture(scope="session")
def pair_op(pair_model):
    return block_rep(pair_model)


@pytest.fixture(scope="session")
def cycle_model():
    return build_cycle3_walk()


@pytest.fixture(scope="session")
def cycle_op(cycle_model):
    return block_rep(cycle_model)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def densities(rng):
    return [random_density(2, rng) for _ in range(20)]


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for name, passed, detail in ACCEPTANCE_LINES:
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'}  {name}: {detail}")
