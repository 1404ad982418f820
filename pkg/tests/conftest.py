import numpy as np
import pytest

from dtude import ACTUAL, manipulator_system
from dtude.observer import ObserverConfig, design_beta
from dtude.ude import UdeConfig, design_kd


@pytest.fixture(scope="session")
def sys10():
    """Nominal two-link system at Ts = 0.01 with the actual parameters."""
    return manipulator_system(ACTUAL, 0.01)


@pytest.fixture(scope="session")
def sys1():
    return manipulator_system(ACTUAL, 0.001)


@pytest.fixture(scope="session")
def loop10(sys10):
    ucfg = UdeConfig(sys=sys10, Kd=design_kd(sys10), tau=0.01)
    ocfg = ObserverConfig(sys=sys10, beta=design_beta(sys10))
    return ucfg, ocfg


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for k in sorted(results):
            terminalreporter.write_line(results[k])
