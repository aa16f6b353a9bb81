
import numpy as np
import pytest

from geometry.fields import random_field
from geometry.grid import ProductGrid
from utils.numerics import expm_herm


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def torus():
    return ProductGrid(8, "torus", (8, 8))


@pytest.fixture
def small_torus():
    return ProductGrid(4, "torus", (4, 4))


@pytest.fixture
def annulus():
    return ProductGrid(8, "annulus", (8, 17))


@pytest.fixture
def band_limited(rng):
    """Factory for seeded band-limited random fields on a grid."""

    def make(grid, rank=2, hermitian=False, amplitude=1.0, fibre_constant=False):
        return random_field(rng, grid, rank, hermitian=hermitian, amplitude=amplitude,
                            fibre_constant=fibre_constant)

    return make


@pytest.fixture
def base_sigma(rng):
    """Factory for random positive fibre-constant metrics given as base data."""

    def make(grid, rank=2, amplitude=0.3):
        u = random_field(rng, grid, rank, hermitian=True, amplitude=amplitude, fibre_constant=True)[0, 0]
        return expm_herm(u)

    return make
