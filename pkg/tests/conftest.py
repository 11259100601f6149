import os
import sys

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, os.path.dirname(__file__))

from mcarma_gof import catalog  # noqa: E402
from mcarma_gof.model import discretize  # noqa: E402

settings.register_profile("default", max_examples=40, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("thorough", max_examples=300, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

# lines reported by the acceptance suite, echoed in the terminal summary
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def carma_disc():
    return discretize(catalog.get("carma21/T").model, 1.0)


@pytest.fixture(scope="session")
def mcar_disc():
    return discretize(catalog.get("mcar1/T").model, 1.0)


@pytest.fixture(scope="session")
def mcarma_disc():
    return discretize(catalog.get("mcarma21/T").model, 1.0)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
