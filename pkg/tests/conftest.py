import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def three_sigma(n, p):
    """Three binomial standard deviations of a count over ``n`` trials."""
    return 3.0 * np.sqrt(n * p * (1.0 - p))
