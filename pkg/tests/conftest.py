import numpy as np
import pytest
from hypothesis import settings

from fracsing.geometry import build_interval
from fracsing.kernel import Field, assemble
from fracsing.solver import SolverConfig

settings.register_profile("default", deadline=None, max_examples=40)
settings.load_profile("default")


@pytest.fixture(scope="session")
def small_interval():
    return build_interval(-1.0, 1.0, 33, 0.25)


@pytest.fixture(scope="session")
def interval65():
    return build_interval(-1.0, 1.0, 65, 0.25)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def quick_config():
    return SolverConfig(n_schedule=(1, 2, 4, 8, 16))


def random_field(domain, rng, positive=False):
    vals = rng.standard_normal(domain.n_interior)
    if positive:
        vals = np.abs(vals)
    return Field.from_interior(domain, vals)


def weights_for(domain, s, p, strict=True):
    return assemble(domain, s, p, strict=strict)


# one line per acceptance criterion, filled in by test_acceptance.py
ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[k])
