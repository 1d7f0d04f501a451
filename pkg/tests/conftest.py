import numpy as np
import pytest

from models import Scenario
from path_network import build_network, fixture_a, fixture_b


@pytest.fixture
def net_a():
    return fixture_a()


@pytest.fixture
def net_b():
    return fixture_b()


@pytest.fixture
def ones():
    return Scenario(weights=(1.0, 1.0, 1.0))


@pytest.fixture
def single():
    return build_network([0.0], [(1.0, 2.0)], 1.0, 1.0)


@pytest.fixture
def rng():
    return np.random.default_rng(20140101)
