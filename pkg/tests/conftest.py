import numpy as np
import pytest

from kinspec.collision_models import bgk_linear, bgk_quadratic, variable_frequency_model
from kinspec.velocity_space import build_basis

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def basis3():
    return build_basis(3, 6)


@pytest.fixture(scope="session")
def basis2():
    return build_basis(2, 8)


@pytest.fixture(scope="session")
def bgk3(basis3):
    return bgk_linear(basis3, 1.0)


@pytest.fixture(scope="session")
def bgk2(basis2):
    return bgk_linear(basis2, 1.0)


@pytest.fixture(scope="session")
def vf3(basis3):
    return variable_frequency_model(basis3, 1.0, 1.0)


@pytest.fixture(scope="session")
def quad3(basis3):
    return bgk_quadratic(basis3)


@pytest.fixture(scope="session")
def quad2(basis2):
    return bgk_quadratic(basis2)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
