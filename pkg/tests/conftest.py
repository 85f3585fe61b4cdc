import numpy as np
import pytest

from fsketch import kernels

ACCEPTANCE_LINES = []


@pytest.fixture(params=sorted(kernels.BACKENDS))
def backend(request):
    return request.param


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
