import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("ci", max_examples=25, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("thorough", max_examples=500, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


def pytest_addoption(parser):
    parser.addoption("--full-preset", action="store_true", default=False,
                     help="run the full-scale reproduction (hours of CPU time)")
    parser.addoption("--run-dir", default=None,
                     help="reuse an existing desk run directory for the acceptance checks")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--full-preset"):
        return
    skip = pytest.mark.skip(reason="needs --full-preset")
    for item in items:
        if item.get_closest_marker("full"):
            item.add_marker(skip)


@pytest.fixture
def rng():
    return np.random.default_rng(0)


@pytest.fixture(scope="session")
def mnist():
    from geneo_lab.data import load_mnist_dir, mnist_available
    if not mnist_available():
        pytest.skip("MNIST files not found (set GENEO_LAB_DATA)")
    return load_mnist_dir()


_ACCEPTANCE: list = []


@pytest.fixture(scope="session")
def acceptance_log():
    """Collects one PASS/FAIL line per acceptance criterion for the terminal summary."""
    return _ACCEPTANCE


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE:
            terminalreporter.write_line(line)
