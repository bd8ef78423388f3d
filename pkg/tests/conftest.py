import numpy as np
import pytest

from qsl.boundary import dirichlet
from qsl.coefficients import PiecewiseFunction, build_coefficients

ACCEPTANCE_LINES = []


@pytest.fixture
def laplace_pi():
    return build_coefficients(1.0, 0.0, (0.0, np.pi))


@pytest.fixture
def laplace_unit():
    return build_coefficients(1.0, 0.0, (0.0, 1.0))


@pytest.fixture
def delta_unit():
    """``p = 1`` and a unit jump of ``Q`` at 1/2 on (0, 1)."""
    return build_coefficients(1.0, PiecewiseFunction.step(0.5, 1.0, (0.0, 1.0)))


@pytest.fixture
def dirichlet_bc():
    return dirichlet()


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
