import numpy as np
import pytest

from ctrlenergy.counterexample import a_eps, theorem1_B
from ctrlenergy.gramian import LinearSystem


def random_stable(rng, n, shift=0.5):
    """Random strictly stable matrix: random matrix shifted left of its
    spectral abscissa."""
    M = rng.standard_normal((n, n))
    return M - (np.max(np.linalg.eigvals(M).real) + shift) * np.eye(n)


def random_symmetric_stable(rng, n):
    M = rng.standard_normal((n, n))
    M = M + M.T
    return M - (np.max(np.linalg.eigvalsh(M)) + 0.5) * np.eye(n)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def theorem1_system():
    return LinearSystem(-0.5 * np.eye(2), theorem1_B())


@pytest.fixture
def theorem1_eps_system():
    return LinearSystem(a_eps(1e-4), theorem1_B())


# one line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
