import numpy as np
import pytest

from hesflex import default_fleet


@pytest.fixture
def fleet():
    """Reference fleet: 5 MW / 5 MWh battery, 3 MW PV, 3 MW load, 2 s step."""
    return default_fleet()


@pytest.fixture
def rng():
    return np.random.default_rng(20210101)
