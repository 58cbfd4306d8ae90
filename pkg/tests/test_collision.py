import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from kblab.collision import (KernelParams, SphereQuadrature, VelocityGrid, apply_field, apply_L, build_tables,
                             collision_frequency, gamma_bilinear)
from kblab.collision import _kernels
from kblab.io import load_tables, save_tables
from kblab.lp import FourierGrid, SpectralField, build_dyadic_system
from kblab.macro import project_values

NU0_HARD_SPHERE = 2 * math.pi * 2 * math.sqrt(2 / math.pi)  # 2 pi E|xi_*| for a standard Gaussian


def rel(a, b):
    return float(np.linalg.norm(a - b) / np.linalg.norm(b))


def wnorm(vg, f):
    return float(np.sqrt(np.sum(f ** 2 * vg.weights)))


def hermite_field(vg, seed, degree=4):
    """Smooth random velocity profile: Gaussian-weighted polynomial."""
    rng = np.random.default_rng(seed)
    v = vg.nodes
    poly = np.zeros(vg.size)
    for _ in range(8):
        e = rng.integers(0, degree + 1, size=3)
        if e.sum() <= degree:
            poly += rng.normal() * np.prod(v ** e, axis=1)
    return poly * vg.sqrt_mu + 0.1 * rng.normal() * vg.sqrt_mu


# grids -------------------------------------------------------------------------
def test_velocity_grid_mass():
    vg = VelocityGrid()
    assert np.all(vg.weights > 0)
    assert abs(np.sum(vg.weights * vg.mu) - 1.0) < 1e-4


@pytest.mark.parametrize("n", [2, 26, 50, 100])
def test_sphere_quadrature(n):
    sph = SphereQuadrature(n)
    assert abs(sph.weights.sum() - 4 * math.pi) < 1e-10
    assert np.abs(sph.weights @ sph.nodes).max() < 1e-10
    assert np.allclose(np.linalg.norm(sph.nodes, axis=1), 1.0)


def test_sphere_rejects_odd():
    with pytest.raises(ValueError):
        SphereQuadrature(25)


def test_kernel_bound_enforced():
    with pytest.raises(ValueError):
        KernelParams(1.0, angular_factor=lambda t: np.ones_like(t))
    with pytest.raises(ValueError):
        KernelParams(1.5)
    KernelParams(0.5, angular_factor=lambda t: 0.5 * np.abs(np.cos(t)), name="half")


# golden values ------------------------------------------------------------------
def test_nu_maxwell_molecules(tables12_g0):
    assert np.abs(tables12_g0.nu / (2 * math.pi) - 1.0).max() < 1e-3


def test_nu_origin_hard_spheres(tables12):
    nu0 = float(tables12.nu_at(np.zeros(3))[0])
    assert abs(nu0 / NU0_HARD_SPHERE - 1.0) < 1e-2


def test_nu_positive_and_equivalent(tables12):
    assert np.all(tables12.nu > 0)
    lo, hi = tables12.nu_bounds()
    vg16 = VelocityGrid(6.0, 16)
    nu16 = collision_frequency(vg16, SphereQuadrature(26), KernelParams(1.0))
    r16 = nu16 / (1 + np.sqrt(vg16.speed_sq))
    assert 0 < lo <= hi < math.inf
    assert abs(r16.min() / lo - 1) < 0.1 and abs(r16.max() / hi - 1) < 0.1


def test_collision_frequency_matches_tables(tables7):
    nu = collision_frequency(tables7.vgrid, tables7.sphere, tables7.kernel)
    assert np.abs(nu - tables7.nu).max() < 1e-12 * tables7.nu.max()


def test_k_symmetric(tables12):
    K = tables12.k_matrix
    assert np.abs(K - K.T).max() <= 1e-8 * np.abs(K).max()


def test_k_on_sqrt_mu(tables12):
    vg = tables12.vgrid
    sq = vg.sqrt_mu
    assert wnorm(vg, tables12.apply_K(sq) - tables12.nu * sq) <= 5e-2 * wnorm(vg, tables12.nu * sq)


@pytest.mark.parametrize("which", ["1", "xi1", "xi3", "energy"])
def test_L_kernel(tables12, which):
    vg = tables12.vgrid
    v = vg.nodes
    zeta = {"1": np.ones(vg.size), "xi1": v[:, 0], "xi3": v[:, 2], "energy": vg.speed_sq}[which]
    f = zeta * vg.sqrt_mu
    assert wnorm(vg, apply_L(tables12, f)) <= 5e-2 * wnorm(vg, tables12.nu * f)


def test_L_raw_kernel_reported(tables12):
    # the unsymmetrised assembly is only quadrature-consistent; keep it within 25%
    vg = tables12.vgrid
    f = vg.sqrt_mu
    l_raw = np.diag(tables12.nu) - tables12.k_raw
    assert wnorm(vg, l_raw @ f) <= 0.25 * wnorm(vg, tables12.nu * f)


@pytest.mark.parametrize("seed", range(100))
def test_L_nonnegative(tables12, seed):
    f = np.random.default_rng(seed).normal(size=tables12.size) * tables12.vgrid.sqrt_mu ** 0.5
    assert float(np.sum(apply_L(tables12, f) * f * tables12.vgrid.weights)) >= -1e-12 * wnorm(
        tables12.vgrid, f) ** 2


def test_L_maps_into_microscopic(tables12):
    vg = tables12.vgrid
    f = hermite_field(vg, 3)
    lf = apply_L(tables12, f)
    _, plf, _ = project_values(lf, vg)
    assert wnorm(vg, plf) <= 1e-8 * wnorm(vg, lf)


def test_post_collision_relative_speed(tables12):
    vg, sph = tables12.vgrid, tables12.sphere
    assert _kernels.post_collision_gap(vg.nodes, sph.nodes, 400, 37) < 1e-12


def test_clipping_counted(tables12):
    assert 0.0 < tables12.clipped_fraction < 1.0


# Gamma ----------------------------------------------------------------------------
def test_gamma_bilinear_zero(tables7):
    g = hermite_field(tables7.vgrid, 1)
    z = np.zeros_like(g)
    assert np.all(gamma_bilinear(tables7, z, g) == 0.0)
    assert np.all(gamma_bilinear(tables7, g, z) == 0.0)


@given(st.integers(0, 2 ** 31), st.floats(-2, 2))
def test_gamma_bilinear_linear(tables7, seed, alpha):
    vg = tables7.vgrid
    f, g, h = (hermite_field(vg, seed + i) for i in range(3))
    lhs = tables7.gamma(alpha * f + h, g, conservative=False)
    rhs = alpha * tables7.gamma(f, g, conservative=False) + tables7.gamma(h, g, conservative=False)
    assert np.allclose(lhs, rhs, rtol=0, atol=1e-12 * (np.abs(lhs).max() + 1e-300))


@pytest.mark.parametrize("which,seed", [("tables12", 0), ("tables7", 1), ("tables7", 2), ("tables7", 3)])
def test_gamma_invariants(request, which, seed):
    tables = request.getfixturevalue(which)
    vg = tables.vgrid
    f, g = hermite_field(vg, seed), hermite_field(vg, seed + 10)
    gam = gamma_bilinear(tables, f, g)
    defect = tables.collision_invariant_defect(gam)
    assert abs(defect[0]) <= 1e-2 * wnorm(vg, gam)  # mass for any pair
    sym = gam + gamma_bilinear(tables, g, f)
    assert np.abs(tables.collision_invariant_defect(sym)).max() <= 1e-2 * wnorm(vg, sym)
    gff = gamma_bilinear(tables, f, f)
    assert np.abs(tables.collision_invariant_defect(gff)).max() <= 1e-2 * wnorm(vg, gff)


def test_gamma_raw_mass_defect(tables12):
    # raw mass defect is a quadrature effect; reported, bounded by 10% of ||Gamma||
    vg = tables12.vgrid
    f = hermite_field(vg, 7)
    gam = tables12.gamma(f, f, conservative=False)
    assert abs(tables12.collision_invariant_defect(gam)[0]) <= 0.1 * wnorm(vg, gam)


@pytest.fixture(scope="module")
def tables12_s50():
    return build_tables(VelocityGrid(), SphereQuadrature(50), KernelParams(1.0))


def test_gamma_linearization(tables12_s50):
    t = tables12_s50
    vg = t.vgrid
    _, _, f = project_values(hermite_field(vg, 4), vg)
    sq = vg.sqrt_mu
    lin = t.gamma(f, sq, conservative=False) + t.gamma(sq, f, conservative=False)
    assert wnorm(vg, lin + apply_L(t, f)) <= 5e-2 * wnorm(vg, apply_L(t, f))


def test_gamma_linearization_equals_raw_L(tables7):
    vg = tables7.vgrid
    f = hermite_field(vg, 5)
    sq = vg.sqrt_mu
    lin = tables7.gamma(f, sq, conservative=False) + tables7.gamma(sq, f, conservative=False)
    t_direct = build_tables(vg, tables7.sphere, tables7.kernel, interpolation_order=1, gamma_order=1)
    l_raw = np.diag(t_direct.nu) - t_direct.k_raw
    assert rel(lin, -(l_raw @ f)) < 1e-10


def test_gamma_stored_equals_direct(tables7):
    vg = tables7.vgrid
    f, g = hermite_field(vg, 1), hermite_field(vg, 2)
    A, B = f[:, None], g[:, None]
    stored = tables7.gain_pairs(A, B)
    direct = _kernels.gain_direct(A.copy(), B.copy(), *tables7._kernel_args())
    assert rel(stored, direct) < 1e-12


# field lifting ----------------------------------------------------------------------
def random_snapshot(grid, vg, seed):
    rng = np.random.default_rng(seed)
    x = np.stack([hermite_field(vg, seed + i) for i in range(3)])
    coef = rng.normal(size=(grid.points_per_axis, 3))
    phys = coef @ x / 10
    return SpectralField(grid, grid.forward(phys))


def test_apply_field_commutes_with_blocks(tables7):
    grid = FourierGrid(1, 32)
    sys = build_dyadic_system(grid)
    F = random_snapshot(grid, tables7.vgrid, 0)
    KF = apply_field(tables7, "K", F).values
    for q in sys.block_indices:
        m = grid.expand(sys.block_multiplier(q), 2)
        assert np.abs(m * KF - tables7.apply_K(m * F.values)).max() <= 1e-10 * np.abs(KF).max()


def test_apply_field_zero_and_single_mode(tables7):
    grid = FourierGrid(1, 16)
    vg = tables7.vgrid
    zero = SpectralField(grid, np.zeros(grid.shape + (vg.size,), complex))
    for op in ("L", "K", "nu_mult", "gamma"):
        assert np.all(apply_field(tables7, op, zero).values == 0.0)
    f = hermite_field(vg, 9)
    const = SpectralField(grid, np.zeros(grid.shape + (vg.size,), complex))
    const.values[0] = f
    assert rel(apply_field(tables7, "L", const).values[0].real, tables7.apply_L(f)) < 1e-14
    gam = apply_field(tables7, "gamma", const).values
    assert rel(gam[0].real, tables7.gamma(f, f)) < 1e-10
    assert np.abs(gam[1:]).max() <= 1e-12 * np.abs(gam[0]).max()


def test_apply_field_errors(tables7):
    grid = FourierGrid(1, 16)
    F = SpectralField(grid, np.zeros(grid.shape + (5,), complex))
    with pytest.raises(ValueError):
        apply_field(tables7, "L", F)
    with pytest.raises(ValueError):
        apply_field(tables7, "bogus", F)


def test_tables_roundtrip(tables7, tmp_path):
    save_tables(tables7, tmp_path / "t")
    back = load_tables(tmp_path / "t.json")
    for name in ("nu", "k_matrix", "l_matrix", "loss_matrix", "k_raw", "projector"):
        assert np.array_equal(getattr(back, name), getattr(tables7, name))
    f = hermite_field(tables7.vgrid, 3)
    assert np.array_equal(back.gamma(f, f), tables7.gamma(f, f))
    head = (tmp_path / "t.json").read_text()
    assert '"endianness": "little"' in head and '"version": "1"' in head
