import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from kblab.collision import VelocityGrid
from kblab.lp import FourierGrid, SpectralField, build_dyadic_system
from kblab.macro import (InteractiveParams, assemble, coefficients, fluid_residual, interactive_functional,
                         macro_basis, moment_values, project, project_values)
from kblab.norms import DistributionTrajectory

VG = VelocityGrid(4.55, 7)


def vector_field(seed, vg=VG):
    return np.random.default_rng(seed).normal(size=vg.size) * vg.sqrt_mu ** 0.5


def test_project_goldens():
    v, sq = VG.nodes, VG.sqrt_mu
    co = coefficients(sq, VG)
    assert abs(co.a - 1) < 1e-12 and np.abs(co.b).max() < 1e-12 and abs(co.c) < 1e-12
    co = coefficients(v[:, 1] * sq, VG)
    assert abs(co.a) < 1e-12 and np.allclose(co.b, [0, 1, 0], atol=1e-12) and abs(co.c) < 1e-12
    co = coefficients((VG.speed_sq - 3) * sq, VG)
    assert abs(co.a) < 1e-12 and np.abs(co.b).max() < 1e-12 and abs(co.c - 1) < 1e-12


def test_moment_goldens():
    v, sq = VG.nodes, VG.sqrt_mu
    m = moment_values(sq, VG)
    # quadrature approximations of Theta(sqrt mu) = 0, Lambda(sqrt mu) = 0
    assert np.abs(m.theta).max() < 1e-3 and np.abs(m.lam).max() < 1e-12
    m = moment_values(v[:, 0] ** 2 * sq, VG)
    # ((xi_1^2 - 1) xi_1^2 mu) = 3 - 1 = 2
    assert abs(m.theta[0, 0] - 2) < 1e-2 and abs(m.theta[0, 1]) < 1e-12
    assert np.allclose(m.theta, np.swapaxes(m.theta, -1, -2))


@given(st.integers(0, 10 ** 6))
def test_projection_idempotent_orthogonal(seed):
    f = vector_field(seed)
    co, pf, micro = project_values(f, VG)
    _, ppf, _ = project_values(pf, VG)
    assert np.allclose(ppf, pf, atol=1e-12 * np.abs(f).max())
    basis = macro_basis(VG)
    assert np.abs((basis * VG.weights) @ micro).max() < 1e-12 * np.abs(f).max()
    assert np.allclose(pf + micro, f)
    assert np.allclose(assemble(co, VG), pf)


def test_project_snapshot_shape_check():
    grid = FourierGrid(1, 16)
    with pytest.raises(ValueError):
        project(SpectralField(grid, np.zeros(grid.shape + (5,), complex)), VG)


def test_moments_vanish_on_macroscopic_part_of_lambda():
    # Lambda only sees odd moments beyond b; (|xi|^2-5) xi sqrt(mu) is orthogonal to xi sqrt(mu)
    f = VG.nodes[:, 2] * VG.sqrt_mu
    assert np.abs(moment_values(f, VG).lam).max() < 1e-3


def test_fluid_residual_zero():
    from kblab.verify.sampling import _tables
    tables = _tables(4.55, 7, 26, 1.0, 1)
    grid = FourierGrid(1, 16)
    traj = DistributionTrajectory(np.linspace(0, 0.1, 4), np.zeros((4,) + grid.shape + (VG.size,), complex),
                                  grid, VG)
    res = fluid_residual(traj, tables)
    assert np.all(res.series == 0.0) and res.series.shape == (4, 5)
    with pytest.raises(ValueError):
        fluid_residual(DistributionTrajectory(traj.times[:2], traj.values[:2], grid, VG), tables)


def test_interactive_functional_zero_cases():
    grid = FourierGrid(1, 32)
    sys = build_dyadic_system(grid)
    params = InteractiveParams()
    zero = SpectralField(grid, np.zeros(grid.shape + (VG.size,), complex))
    assert interactive_functional(zero, 1, params, VG, sys) == 0.0
    # spatially constant field: every term carries a spatial gradient
    const = zero.with_values(zero.values.copy())
    const.values[0] = vector_field(1)
    assert abs(interactive_functional(const, -1, params, VG, sys)) < 1e-12
    # purely macroscopic field with b = 0 has no coupling terms
    x = grid.points[0]
    a_only = SpectralField.from_physical(grid, np.cos(3 * x)[:, None] * VG.sqrt_mu)
    assert abs(interactive_functional(a_only, 2, params, VG, sys)) < 1e-12


def test_interactive_params_validation():
    with pytest.raises(ValueError):
        InteractiveParams(kappa1=0.01, kappa2=0.1)
    with pytest.raises(ValueError):
        InteractiveParams(kappa3=1.0)
