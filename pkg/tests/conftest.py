import numpy as np
import pytest

_ACCEPTANCE_LINES: list[str] = []


def record_acceptance(line: str) -> None:
    _ACCEPTANCE_LINES.append(line)


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def random_weights(rng: np.random.Generator, n_max: int = 50, lo: float = 1e-2, hi: float = 1e2) -> np.ndarray:
    n = int(rng.integers(2, n_max + 1))
    return rng.uniform(lo, hi, n) * rng.choice([-1.0, 1.0], n)


@pytest.fixture
def np_rng():
    return np.random.default_rng(20240611)
