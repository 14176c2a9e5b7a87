import numpy as np
import pytest

from delaydisp.discretization import SpatialGrid, build_operators
from delaydisp.model import DampingProfile, HistorySpec, ModelParams


@pytest.fixture
def params():
    return ModelParams(nu=0.01, mu=0.001, tau=0.0, ell=1.0)


@pytest.fixture
def grid():
    return SpatialGrid(99, 1.0)


@pytest.fixture
def ops(grid):
    return build_operators(grid)


@pytest.fixture
def sin_history():
    return HistorySpec.constant_profile("sin")


@pytest.fixture
def unit_damping():
    return DampingProfile.constant(1.0)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# Acceptance lines are collected here and printed after the test session.
ACCEPTANCE = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[ACCEPTANCE] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
