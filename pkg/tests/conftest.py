import numpy as np
import pytest

from fleetcap import Device, Fleet


@pytest.fixture
def fleet_a() -> Fleet:
    """Two-device fleet used in hand-derived examples throughout the suite:
    1 kW / 4 kWh and 2 kW / 2 kWh, so remaining times are [4, 1] h."""
    return Fleet([Device("a", 1.0, 4.0), Device("b", 2.0, 2.0)])


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20260811)
