import math

import pytest

from nvdnp.bath import radius_for_count, sample_bath
from nvdnp.hamiltonian import SystemSpec


@pytest.fixture
def spec():
    return SystemSpec.from_larmor(4.87)


@pytest.fixture(scope="session")
def small_bath():
    return sample_bath((7, 0), radius_for_count(120))


@pytest.fixture
def pair_spec():
    """Isolated NV-13C pair at exact Hartmann-Hahn matching."""
    return SystemSpec.from_larmor(4.87, a_x=0.1)


DEG = math.pi / 180


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import RESULTS

    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
