import numpy as np
import pytest

from ssalab import RngStream

ACCEPTANCE_LINES = []


@pytest.fixture
def rng():
    return RngStream(20261015, 0)


@pytest.fixture
def report_line():
    """Collect one summary line per acceptance criterion; printed at the end of the run."""
    def add(criterion, ok, detail):
        line = f"criterion {criterion:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
    return add


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)


def assert_close(a, b, rtol=1e-12):
    np.testing.assert_allclose(a, b, rtol=rtol, atol=0)
