import numpy as np
import pytest

from l0pk._backend import compiled_kernels, python_kernels

KERNELS = [python_kernels] + ([compiled_kernels] if compiled_kernels is not None else [])


@pytest.fixture(params=KERNELS, ids=lambda k: k.NAME)
def kern(request):
    return request.param


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
