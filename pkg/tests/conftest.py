import numpy as np
import pytest

from lsrx.distributions import ScalarDistribution


@pytest.fixture
def flat():
    return ScalarDistribution.point_masses([1.0], [1.0])


@pytest.fixture
def exp_unit():
    return ScalarDistribution.exponential(1.0)


@pytest.fixture
def two_power():
    # quarter of the streams at half power
    return ScalarDistribution.point_masses([1.0, 0.5], [0.75, 0.25])


@pytest.fixture
def rng():
    return np.random.default_rng(2026)
