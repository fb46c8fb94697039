from pathlib import Path

import numpy as np
import pytest

DATA = Path(__file__).parent / "data"


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def scalar_exact(problem):
    """``exact(pts) -> (values, grads)`` adapter for error_norms."""
    def f(pts):
        j = problem.exact_jet(pts, 1)
        return j.val, [j[(1, 0)]] if problem.dim == 1 else [j[(1, 0)], j[(0, 1)]]
    return f


# one summary line per acceptance criterion, printed after the test report
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
