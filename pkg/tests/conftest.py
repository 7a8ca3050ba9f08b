import numpy as np
import pytest

from relaydeploy.channel import (ChannelParams, FiniteShadowing, PowerSet,
                                 discretize_lognormal)


@pytest.fixture(scope="session")
def field_params():
    """Forest-measurement channel constants used throughout."""
    return ChannelParams(eta=4.7, c=10**0.17, r0_m=1.0,
                         p_rcv_min_mw=10**-9.7, delta_m=20.0)


@pytest.fixture(scope="session")
def power5():
    return PowerSet.from_dbm([-18.0, -7.0, -4.0, 0.0, 5.0])


@pytest.fixture(scope="session")
def model31():
    return discretize_lognormal(7.7, 31)


@pytest.fixture(scope="session")
def model2():
    return FiniteShadowing(values=(0.5, 2.0), probs=(0.4, 0.6))


@pytest.fixture
def rng():
    return np.random.default_rng(20240901)
