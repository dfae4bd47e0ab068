import numpy as np
import pytest

from walklab.rng import make_stream


@pytest.fixture
def stream():
    return make_stream(1, 0)


def within_4se(values, target):
    x = np.asarray(values, dtype=float)
    se = x.std(ddof=1) / np.sqrt(x.size)
    return abs(x.mean() - target) < 4 * se


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
