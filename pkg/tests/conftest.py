import numpy as np
import pytest

from hdivstokes.assembly import StabConfig, build_dofmap
from hdivstokes.mesh import generate_structured


@pytest.fixture(scope="session")
def structured():
    cache = {}

    def get(n):
        if n not in cache:
            mesh = generate_structured(n)
            cache[n] = (mesh, build_dofmap(mesh))
        return cache[n]

    return get


@pytest.fixture
def jd():
    return StabConfig("JD", 1.0)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


UNIT_RIGHT = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
