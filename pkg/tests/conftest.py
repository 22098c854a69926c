import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default",
    max_examples=40,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")


def random_symmetric(rng: np.random.Generator, n: int) -> np.ndarray:
    a = rng.standard_normal((n, n))
    return (a + a.T) / 2.0


@pytest.fixture
def exchange() -> np.ndarray:
    return np.array([[0.0, 1.0], [1.0, 0.0]])


@pytest.fixture
def caso3() -> np.ndarray:
    # columns 2 and 3 are orthogonal to column 1; ||T|| = sqrt(2)
    return np.array([[0.0, 1.0, 1.0], [1.0, -0.5, 0.5], [1.0, 0.5, -0.5]])


ACCEPTANCE_LINES = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[ACCEPTANCE_LINES] = []


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(ACCEPTANCE_LINES, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(lines):
            terminalreporter.write_line(line)
