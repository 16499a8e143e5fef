import numpy as np
import pytest

from pncsim.netmodel import PowerProfile, PropagationParams


@pytest.fixture
def power():
    return PowerProfile()


@pytest.fixture
def prop():
    return PropagationParams()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
