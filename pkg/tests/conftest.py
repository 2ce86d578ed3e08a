import numpy as np
import pytest

from emberplan.fire import ParameterVector, initial_state, uniform_wind
from emberplan.raster import GridGeometry, RasterGrid


@pytest.fixture
def geom5():
    return GridGeometry(nrows=5, ncols=5, cellsize=10.0)


@pytest.fixture
def fuel5(geom5):
    return RasterGrid(geom=geom5, values=np.ones(geom5.shape))


@pytest.fixture
def params5(fuel5):
    return ParameterVector(p0=1.0, cw=0.0, tau_burn=1, fuel_map=fuel5)


@pytest.fixture
def center_fire5(geom5):
    """5x5 all-fuel grid with the center cell burning."""
    return initial_state(geom5, np.ones(geom5.shape, dtype=bool), [(2, 2)], tau_burn=1)


@pytest.fixture
def calm_wind():
    return uniform_wind(0.0, 0.0, steps=50)
