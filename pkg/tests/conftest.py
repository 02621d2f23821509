import numpy as np
import pytest

S_GRID = [-1.0, -0.5, 0.0, 0.5, 1.0, 1.5, 2.0]


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


# Per-criterion verdict lines collected by test_acceptance.py
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
