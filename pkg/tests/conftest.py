import pytest

from dilutebose.potential import PotentialSpec
from dilutebose.scattering import solve_radial

ACCEPTANCE_LINES = []


def gaussian(lam, sigma=1.0):
    return PotentialSpec("gaussian", lam, {"sigma": sigma})


@pytest.fixture(scope="session")
def scat_small():
    return solve_radial(gaussian(0.01))


@pytest.fixture(scope="session")
def scat_01():
    return solve_radial(gaussian(0.1))


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
