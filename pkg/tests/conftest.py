import sys
import numpy as np
import pytest

from natmap.geometry import Space

SPACES = [Space.complex(2), Space.complex(3), Space.quaternionic(2)]


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(params=SPACES, ids=str)
def space(request):
    return request.param


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    lines = getattr(module, "RESULTS", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
