import pytest
from hypothesis import HealthCheck, settings

from helpers import clique, identity_instance

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture
def clique6():
    return identity_instance(clique(6), [(0, 0), (1, 1)])
