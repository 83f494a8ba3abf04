import numpy as np
import pytest
from hypothesis import settings

from rkrecon.kernel_space import make_space

settings.register_profile("ci", max_examples=40, deadline=None)
settings.load_profile("ci")


@pytest.fixture(scope="session")
def hat_space():
    return make_space("hat", -20, 20)


@pytest.fixture(scope="session")
def gauss_space():
    return make_space("gaussian", -25, 25)


@pytest.fixture(scope="session")
def jittered_space():
    return make_space("gaussian", -25, 25, jitter_seed=11)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)
