import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from dualtilt.actuation import Airframe, SaturationBox

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

HOVER_SPIN = 616.98881977331     # sqrt(2 * 9.81 / (6 * 8.59e-6))


@pytest.fixture(scope="session")
def frame():
    return Airframe.star_hexarotor()


@pytest.fixture(scope="session")
def box():
    return SaturationBox.symmetric()


def interior_state(rng, box, margin=0.02):
    """Random actuator state strictly inside ``box``."""
    lo = box.lower + margin * box.width
    hi = box.upper - margin * box.width
    return rng.uniform(lo, hi)


seeds = st.integers(min_value=0, max_value=2**32 - 1)


def rng_from(seed):
    return np.random.default_rng(seed)
