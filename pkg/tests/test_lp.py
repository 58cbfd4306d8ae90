import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from sklearn.base import clone

from kblab.lp import (FourierGrid, LittlewoodPaley, SpectralField, build_dyadic_system, cutoff_profile,
                      dyadic_block, homogeneous_block, low_pass, paraproduct, product, remainder)

from conftest import random_scalar


def rel(a, b):
    return float(np.linalg.norm(np.ravel(a - b)) / max(np.linalg.norm(np.ravel(b)), 1e-300))


def constant_field(grid, value=1.0):
    return SpectralField.from_physical(grid, np.full(grid.shape, value))


# cutoff pair -----------------------------------------------------------------
def test_chi_plateau_and_outside(sys64):
    assert sys64.chi(0.5) == 1.0
    assert sys64.chi(1.5) == 0.0


def test_partition_at_one(sys64):
    # chi(k) + sum_q phi(2^-q k) = 1; at k=1 only q=0 and the q=-1 term overlap with phi(1/2)
    assert abs(sys64.chi(1.0) + sys64.phi(1.0) + sys64.phi(0.5) - 1.0) < 1e-15


def test_supports_on_grid(sys64, grid64):
    k = grid64.kmag
    assert np.all(sys64.chi(k)[k > 4 / 3] == 0.0)
    phi = sys64.phi(k)
    assert np.all(phi[(k < 3 / 4) | (k > 8 / 3)] == 0.0)
    assert np.all((phi >= 0) & (phi <= 1))


@pytest.mark.parametrize("dim,n", [(1, 8), (1, 64), (1, 256), (2, 32), (3, 16)])
def test_partition_of_unity(dim, n):
    sys = build_dyadic_system(FourierGrid(dim, n))
    assert sys.partition_error() < 1e-12


@given(st.floats(0.0, 500.0), st.floats(0.2, 5.0))
def test_cutoff_ranges_and_telescoping(k, sharp):
    chi = cutoff_profile(k, sharp)
    assert 0.0 <= chi <= 1.0
    phis = [cutoff_profile(k / 2 ** (q + 1), sharp) - cutoff_profile(k / 2 ** q, sharp) for q in range(12)]
    assert all(-1e-15 <= p <= 1.0 for p in phis)
    # chi + sum_{q<Q} phi(2^-q k) = chi(2^-Q k), equal to 1 once 2^-Q k <= 3/4
    assert abs(chi + math.fsum(phis) - cutoff_profile(k / 2 ** 12, sharp)) < 1e-12
    assert abs(chi + math.fsum(phis) - 1.0) < 1e-12


def test_q_max_formula():
    g = FourierGrid(1, 64)
    sys = build_dyadic_system(g)
    assert sys.q_max == math.ceil(math.log2(g.kmax / 0.75))


def test_under_resolved_grid():
    with pytest.raises(ValueError, match="under-resolved"):
        build_dyadic_system(FourierGrid(1, 8, domain_length=100.0))


def test_grid_validation():
    for bad in (dict(points_per_axis=12), dict(points_per_axis=4), dict(spatial_dim=4)):
        with pytest.raises(ValueError):
            FourierGrid(**bad)


def test_forward_inverse_roundtrip():
    g = FourierGrid(2, 32)
    x = np.random.default_rng(0).normal(size=g.shape)
    x = g.inverse(g.forward(x))  # remove the Nyquist row once
    assert rel(g.inverse(g.forward(x)), x) < 1e-12


# blocks ----------------------------------------------------------------------
def test_constant_field_blocks(sys64, grid64):
    f = constant_field(grid64, 3.0)
    assert rel(dyadic_block(sys64, -1, f).values, f.values) == 0.0
    assert np.all(dyadic_block(sys64, 0, f).values == 0.0)
    for q in sys64.homogeneous_indices:
        assert np.all(homogeneous_block(sys64, q, f).values == 0.0)


def test_block_range_errors(sys64, grid64):
    f = constant_field(grid64)
    with pytest.raises(ValueError):
        dyadic_block(sys64, -2, f)
    with pytest.raises(ValueError):
        dyadic_block(sys64, sys64.q_max + 1, f)
    with pytest.raises(ValueError):
        low_pass(sys64, sys64.q_max + 2, f)


@pytest.mark.parametrize("seed", range(5))
def test_reconstruction(sys64, grid64, seed):
    f = random_scalar(grid64, seed)
    total = sum((dyadic_block(sys64, q, f).values for q in sys64.block_indices), np.zeros_like(f.values))
    assert rel(total, f.values) < 1e-10
    assert rel(low_pass(sys64, sys64.q_max + 1, f).values, f.values) < 1e-10


def test_low_pass_conventions(sys64, grid64):
    f = random_scalar(grid64, 1)
    assert np.all(low_pass(sys64, -1, f).values == 0.0)
    assert rel(low_pass(sys64, 0, f).values, dyadic_block(sys64, -1, f).values) == 0.0


def test_homogeneous_reconstruction_removes_mean(sys64, grid64):
    f = random_scalar(grid64, 2)
    total = sum(homogeneous_block(sys64, q, f).values for q in sys64.homogeneous_indices)
    target = f.values.copy()
    target[0] = 0.0
    assert rel(total, target) < 1e-10


def test_single_shell_homogeneous_support(sys64, grid64):
    q0 = 3
    k = grid64.kmag
    coef = np.where((k >= 0.75 * 2 ** q0) & (k <= 4 / 3 * 2 ** q0) & ~grid64.nyquist_mask, 1.0, 0.0)
    f = SpectralField(grid64, coef + 0j)
    for q in sys64.homogeneous_indices:
        block = homogeneous_block(sys64, q, f).values
        if abs(q - q0) >= 2:
            assert np.all(block == 0.0)


def test_near_orthogonality(sys64, grid64):
    f = random_scalar(grid64, 3)
    for q in range(0, sys64.q_max + 1):
        for q2 in range(0, sys64.q_max + 1):
            if abs(q - q2) >= 2:
                both = dyadic_block(sys64, q, dyadic_block(sys64, q2, f))
                assert np.abs(both.values).max() <= 1e-12 * np.abs(f.values).max()


def test_parity_preserved(sys64, grid64):
    f = random_scalar(grid64, 4)
    assert f.hermitian_error() < 1e-12
    for q in sys64.block_indices:
        b = dyadic_block(sys64, q, f)
        assert b.real and b.hermitian_error() < 1e-12


def test_bernstein_shell(sys64, grid64):
    f = random_scalar(grid64, 6)
    for q in range(0, sys64.q_max - 1):
        b = homogeneous_block(sys64, q, f)
        grad = grid64.gradient(b.values)
        ratio = math.sqrt(grid64.l2_inner(grad, grad).sum()) / (2 ** q * math.sqrt(grid64.l2_inner(b.values,
                                                                                                    b.values)))
        assert 0.75 - 1e-12 <= ratio <= 8 / 3 + 1e-12


# products --------------------------------------------------------------------
@pytest.mark.parametrize("seed", range(4))
def test_bony_identity(sys64, grid64, seed):
    u = random_scalar(grid64, 10 + seed, k_max=20)
    v = random_scalar(grid64, 20 + seed, k_max=20)
    total = paraproduct(sys64, u, v).values + paraproduct(sys64, v, u).values + remainder(sys64, u, v).values
    assert rel(total, product(u, v).values) < 1e-10


def test_bony_identity_2d():
    g = FourierGrid(2, 16)
    sys = build_dyadic_system(g)
    u, v = random_scalar(g, 1, k_max=6), random_scalar(g, 2, k_max=6)
    total = paraproduct(sys, u, v).values + paraproduct(sys, v, u).values + remainder(sys, u, v).values
    assert rel(total, product(u, v).values) < 1e-10


def test_remainder_symmetric_and_zero(sys64, grid64):
    u, v = random_scalar(grid64, 31), random_scalar(grid64, 32)
    assert rel(remainder(sys64, u, v).values, remainder(sys64, v, u).values) < 1e-12
    zero = SpectralField(grid64, np.zeros(grid64.shape, complex))
    assert np.all(remainder(sys64, zero, v).values == 0.0)
    assert np.all(paraproduct(sys64, zero, v).values == 0.0)


def test_paraproduct_high_mode(sys64, grid64):
    u = random_scalar(grid64, 7, k_max=2)
    x = grid64.points[0]
    v = SpectralField.from_physical(grid64, np.cos(24 * x))
    assert rel(paraproduct(sys64, u, v).values, product(u, v).values) < 1e-12


def test_grid_mismatch(sys64, grid64):
    other = random_scalar(FourierGrid(1, 32), 0)
    with pytest.raises(ValueError):
        paraproduct(sys64, random_scalar(grid64, 0), other)
    with pytest.raises(ValueError):
        dyadic_block(sys64, 0, other)


@given(st.integers(0, 10 ** 6), st.floats(-3, 3))
def test_blocks_linear(seed, alpha):
    g = FourierGrid(1, 32)
    sys = build_dyadic_system(g)
    f, h = random_scalar(g, seed), random_scalar(g, seed + 1)
    for q in sys.block_indices:
        lhs = dyadic_block(sys, q, f * alpha + h).values
        rhs = alpha * dyadic_block(sys, q, f).values + dyadic_block(sys, q, h).values
        assert np.allclose(lhs, rhs, atol=1e-14, rtol=0)


# estimator -------------------------------------------------------------------
def test_littlewood_paley_estimator():
    rng = np.random.default_rng(0)
    lp = LittlewoodPaley(points_per_axis=32)
    X = rng.normal(size=(4, 32))
    X = lp.fit(X).grid_.inverse(lp.grid_.forward(X, lead=1), lead=1)
    B = lp.transform(X)
    assert B.shape == (4, len(lp.block_indices_), 32)
    assert rel(lp.inverse_transform(B), X) < 1e-12
    assert clone(lp).get_params() == lp.get_params()
    with pytest.raises(ValueError):
        lp.transform(rng.normal(size=(2, 16)))
