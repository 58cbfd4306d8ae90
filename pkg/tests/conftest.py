import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from kblab.collision import KernelParams, SphereQuadrature, VelocityGrid, build_tables
from kblab.lp import FourierGrid, SpectralField, build_dyadic_system
from kblab.solver import band_limited_coefficients
from kblab._random import stream
from kblab.verify.sampling import _tables

settings.register_profile("kblab", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("kblab")


@pytest.fixture(scope="session")
def tables7():
    """Coarse dynamics tables: 7^3 lattice on [-4.55, 4.55]^3, trilinear Gamma."""
    return _tables(4.55, 7, 26, 1.0, 1)


@pytest.fixture(scope="session")
def tables12():
    """Desk-default tables: 12^3 lattice on [-6, 6]^3, hard spheres gamma=1."""
    return _tables(6.0, 12, 26, 1.0, 3)


@pytest.fixture(scope="session")
def tables12_g0():
    return build_tables(VelocityGrid(), SphereQuadrature(26), KernelParams(0.0))


def random_scalar(grid: FourierGrid, seed: int, k_max: float = None, decay: float = 1.0) -> SpectralField:
    """Real band-limited scalar field with Hermitian-symmetric coefficients."""
    k_max = grid.points_per_axis // 2 - 1 if k_max is None else k_max
    coef = band_limited_coefficients(stream(seed, 5), grid, k_max, decay)
    return SpectralField(grid, coef)


@pytest.fixture
def grid64():
    return FourierGrid(1, 64)


@pytest.fixture
def sys64(grid64):
    return build_dyadic_system(grid64)
