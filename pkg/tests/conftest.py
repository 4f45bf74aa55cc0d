import os

import pytest
from hypothesis import HealthCheck, settings

from uavplan.harness import generate_scenario
from uavplan.planner import Mission

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("ci", deadline=None, max_examples=50, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture(scope="session")
def scenario11():
    return generate_scenario(0)


@pytest.fixture(scope="session")
def mission11(scenario11):
    return Mission(scenario11)
