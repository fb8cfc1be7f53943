import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from telab.costs import cost_from_id  # noqa: E402
from telab.families import TestFamily  # noqa: E402
from telab.measures import Grid1D, gaussian  # noqa: E402


@pytest.fixture(scope="session")
def grid():
    return Grid1D(-8.0, 8.0, 1601)


@pytest.fixture(scope="session")
def std_gauss(grid):
    return gaussian(grid)


@pytest.fixture(scope="session")
def small_grid():
    return Grid1D(-6.0, 6.0, 241)


@pytest.fixture(scope="session")
def small_gauss(small_grid):
    return gaussian(small_grid)


@pytest.fixture(scope="session")
def quad():
    return cost_from_id("quadratic")


@pytest.fixture(scope="session")
def family():
    return TestFamily(seed=0)


ACCEPTANCE_LINES = {}


@pytest.fixture
def acceptance():
    """Record one pass/fail line per acceptance criterion."""

    def record(number, title, ok, detail=""):
        line = f"[{'PASS' if ok else 'FAIL'}] criterion {number:2d} {title}: {detail}"
        ACCEPTANCE_LINES[number] = line
        print(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for number in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[number])
