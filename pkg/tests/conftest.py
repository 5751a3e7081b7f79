import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from hfclt.spectrum import table

settings.register_profile("default", max_examples=40, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("thorough", max_examples=400, deadline=None)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture
def two_point():
    """C_{+1} = C_{-1} = 1/2 in one dimension."""
    return table([0.5, 0.0, 0.5])


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
