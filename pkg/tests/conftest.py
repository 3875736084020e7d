import numpy as np
import pytest

from iongate.dynamics import TrapConfig


@pytest.fixture(scope="session")
def trap():
    """Two Cd ions, 2.1 MHz centre-of-mass mode, stretch Lamb-Dicke parameter 0.1."""
    return TrapConfig.from_lamb_dicke(0.1, 2 * np.pi * 2.1e6)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    """Repeat the acceptance verdicts at the end of the run, one line per criterion."""
    import sys
    module = sys.modules.get("test_acceptance")
    lines = getattr(module, "REPORT", None)
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(lines):
        terminalreporter.write_line(lines[n])
