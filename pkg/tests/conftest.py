import os
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

from geogreen.newform import KNOWN_CURVES
from geogreen.qspace import lattice_from_level
from geogreen.quadorder import fundamental_unit, make_field, ring_class_group

settings.register_profile(
    "default",
    max_examples=40,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.function_scoped_fixture],
)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

# d -> d_K: 5, 8, 12, 13, 40, 229
FIELD_LIST = (5, 2, 3, 13, 10, 229)


@pytest.fixture(scope="session")
def cache_dir(tmp_path_factory) -> Path:
    d = tmp_path_factory.mktemp("ggcache")
    os.environ["GEOGREEN_CACHE"] = str(d)
    return d


@pytest.fixture(scope="session")
def F5():
    return make_field(5)


@pytest.fixture(scope="session")
def G5(F5):
    return ring_class_group(F5)


@pytest.fixture(scope="session")
def U5(F5):
    return fundamental_unit(F5)


@pytest.fixture(scope="session")
def lat5(G5):
    """(QA, V1, V2) at level 1 for the principal class of Q(sqrt 5)."""
    return lattice_from_level(G5.reps[0], 1)


@pytest.fixture(scope="session")
def E37():
    return KNOWN_CURVES["37a"]


@pytest.fixture(scope="session")
def E11():
    return KNOWN_CURVES["11a"]


def pytest_terminal_summary(terminalreporter):
    try:
        from tests.test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance")
        for k in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[k][2])
