import numpy as np
import pytest
from hypothesis import settings

from aoipower import _backend

settings.register_profile("default", deadline=None, max_examples=200)
settings.load_profile("default")


def _available():
    names = ["python"]
    try:
        _backend.get("cython")
        names.append("cython")
    except ImportError:
        pass
    return names


BACKENDS = _available()


@pytest.fixture(params=BACKENDS)
def backend(request):
    return request.param


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# one line per acceptance criterion, echoed after the run
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
