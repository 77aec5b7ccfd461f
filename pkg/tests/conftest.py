import numpy as np
import pytest

from nlsepdf import ChannelParams, GridSpec, SpectralField


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)


def random_field(rng, grid, scale=1.0):
    vals = scale * (rng.standard_normal(grid.m) + 1j * rng.standard_normal(grid.m))
    return SpectralField(vals, grid)


@pytest.fixture
def small_grid():
    return GridSpec.create(m=8, n=6, delta=0.5, length=1.0)


@pytest.fixture
def small_params():
    return ChannelParams(beta2=0.4, gamma=0.05, q=0.1, length=1.0)
