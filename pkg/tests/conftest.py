import numpy as np
import pytest
from hypothesis import HealthCheck, settings

# One deterministic profile for the whole suite: no deadlines (numeric tests
# have uneven costs) and derandomized example generation so reruns are
# bit-identical.
settings.register_profile(
    "suite",
    max_examples=25,
    deadline=None,
    derandomize=True,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.data_too_large],
)
settings.load_profile("suite")


@pytest.fixture
def rng():
    return np.random.default_rng(0)
