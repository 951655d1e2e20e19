import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from besovkit.grid import Grid

settings.register_profile("default", deadline=None, max_examples=30,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture(scope="session")
def grid1():
    return Grid(1, 1024, 40.0)


@pytest.fixture(scope="session")
def grid2():
    return Grid(2, 64, 20.0)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance: desk-scale acceptance criteria")


def pytest_terminal_summary(terminalreporter):
    from importlib import import_module
    try:
        results = import_module("test_acceptance").RESULTS
    except ImportError:
        return
    if results:
        terminalreporter.section("acceptance criteria")
        for k in sorted(results):
            terminalreporter.write_line(results[k])
