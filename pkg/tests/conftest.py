import numpy as np
import pytest
from scipy.spatial.transform import Rotation

from so3radon.so3_core import WignerExpansion

# acceptance results collected by test_acceptance and printed at the end of the run
ACCEPTANCE_LINES: list[str] = []


def random_expansion(rng: np.random.Generator, K: int) -> WignerExpansion:
    return WignerExpansion(
        [rng.normal(size=(2 * k + 1,) * 2) + 1j * rng.normal(size=(2 * k + 1,) * 2) for k in range(K + 1)]
    )


def random_points(rng: np.random.Generator, n: int) -> np.ndarray:
    p = rng.normal(size=(n, 3))
    return p / np.linalg.norm(p, axis=1, keepdims=True)


def random_rotations(rng: np.random.Generator, n: int) -> Rotation:
    return Rotation.random(n, random_state=rng)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
