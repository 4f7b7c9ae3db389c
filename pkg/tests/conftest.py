import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from remux.config import load_config

settings.register_profile("remux", max_examples=100, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("remux")


@pytest.fixture(scope="session")
def device():
    return load_config()


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(12345)
