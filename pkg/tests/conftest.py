import numpy as np
import pytest

from wfplab.grid import GridSpec
from wfplab.selftest import Context

_ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def ctx():
    """Default 128² grid with memoized fixed points, shared by the acceptance tests."""
    return Context(GridSpec(), m=4)


@pytest.fixture(scope="session")
def grid64():
    return GridSpec(n_x=64, n_xi=64)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def record_line():
    return _ACCEPTANCE_LINES.append


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
