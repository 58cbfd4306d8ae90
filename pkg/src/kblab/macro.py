"""Macroscopic projection, high-order moments, fluid residuals and the interactive functional.

Spectral snapshots are arrays of shape (*lead, *x, N): optional leading axes
(time), the spatial Fourier grid, then the velocity nodes.  Velocity inner
products use the velocity grid's quadrature weights.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from ._validation import check_real
from .collision.grids import VelocityGrid
from .lp import DyadicSystem, FourierGrid, SpectralField

# coefficient of div Lambda in the c equation, for Lambda = ((|xi|^2-5) xi mu^1/2, f) / 10
C_LAMBDA = 5.0 / 3.0
EQUATIONS = ("mass", "momentum", "energy", "theta", "lambda")


@dataclass(frozen=True)
class InteractiveParams:
    kappa1: float = 0.1
    kappa2: float = 0.01
    kappa3: float = 0.05

    def __post_init__(self):
        for name in ("kappa1", "kappa2", "kappa3"):
            check_real(getattr(self, name), name, low=0.0, high=1.0, strict_low=True)
        if not 0.0 < self.kappa2 < self.kappa1 < 1.0 or self.kappa3 >= 1.0:
            raise ValueError("interactive constants must satisfy 0 < kappa2 < kappa1 < 1 and kappa3 < 1")


@dataclass(frozen=True)
class MacroCoeffs:
    """Spectral coefficient fields; b carries a trailing component axis of length 3."""

    a: np.ndarray
    b: np.ndarray
    c: np.ndarray

    def stacked(self) -> np.ndarray:
        return np.concatenate([self.a[..., None], self.b, self.c[..., None]], axis=-1)


@dataclass(frozen=True)
class MomentSet:
    theta: np.ndarray  # (..., 3, 3)
    lam: np.ndarray  # (..., 3)


@lru_cache(maxsize=16)
def _macro_operators(vgrid: VelocityGrid):
    v = vgrid.nodes
    sq = vgrid.sqrt_mu
    w = vgrid.weights
    basis = np.stack([sq, v[:, 0] * sq, v[:, 1] * sq, v[:, 2] * sq, (vgrid.speed_sq - 3.0) * sq])
    gram = (basis * w) @ basis.T
    dual = np.linalg.solve(gram, basis * w)  # coeffs = f @ dual.T
    theta = (v[:, :, None] * v[:, None, :] - np.eye(3)[None]) * sq[:, None, None]
    theta = np.moveaxis(theta, 0, -1) * w  # (3, 3, N) weighted
    lam = ((vgrid.speed_sq - 5.0)[:, None] * v * sq[:, None] / 10.0).T * w  # (3, N)
    return basis, dual, theta, lam


def macro_basis(vgrid: VelocityGrid) -> np.ndarray:
    """(5, N) rows sqrt(mu), xi_i sqrt(mu), (|xi|^2 - 3) sqrt(mu)."""
    return _macro_operators(vgrid)[0]


def coefficients(values: np.ndarray, vgrid: VelocityGrid) -> MacroCoeffs:
    """(a, b, c) of the quadrature-orthogonal projection onto the fluid modes."""
    co = np.asarray(values) @ _macro_operators(vgrid)[1].T
    return MacroCoeffs(co[..., 0], co[..., 1:4], co[..., 4])


def assemble(coeffs: MacroCoeffs, vgrid: VelocityGrid) -> np.ndarray:
    return coeffs.stacked() @ macro_basis(vgrid)


def project_values(values: np.ndarray, vgrid: VelocityGrid):
    """(coeffs, Pf, {I-P}f) for a raw array with trailing velocity axis."""
    co = coefficients(values, vgrid)
    pf = assemble(co, vgrid)
    return co, pf, np.asarray(values) - pf


def project(snapshot: SpectralField, vgrid: VelocityGrid):
    """Split a snapshot into macroscopic coefficients, Pf and {I-P}f."""
    if snapshot.values.shape[-1] != vgrid.size:
        raise ValueError(f"snapshot has {snapshot.values.shape[-1]} velocity nodes, grid has {vgrid.size}")
    co, pf, micro = project_values(snapshot.values, vgrid)
    return co, snapshot.with_values(pf), snapshot.with_values(micro)


def moment_values(values: np.ndarray, vgrid: VelocityGrid) -> MomentSet:
    _, _, theta, lam = _macro_operators(vgrid)
    values = np.asarray(values)
    return MomentSet(np.einsum("...n,imn->...im", values, theta), values @ lam.T)


def moments(snapshot: SpectralField, vgrid: VelocityGrid) -> MomentSet:
    """Theta_im(f) = ((xi_i xi_m - delta_im) mu^1/2, f), Lambda_i(f) = ((|xi|^2-5) xi_i mu^1/2, f) / 10."""
    return moment_values(snapshot.values, vgrid)


# spatial derivatives on spectral arrays of layout (*lead, *x, *trail) ------------
def _ik(grid: FourierGrid, i: int, ndim: int, lead: int) -> np.ndarray:
    """i k_i broadcast to an ndim array; zero for directions beyond the spatial dimension."""
    if i >= grid.spatial_dim:
        return np.zeros((1,) * ndim)
    k = np.where(grid.nyquist_mask, 0.0, grid.wavenumbers[i])
    return 1j * grid.expand(k, ndim, lead)


def gradient3(grid: FourierGrid, coeffs: np.ndarray, lead: int = 0) -> np.ndarray:
    """Three-component spectral gradient appended as the last axis."""
    return np.stack([_ik(grid, i, coeffs.ndim, lead) * coeffs for i in range(3)], axis=-1)


def divergence3(grid: FourierGrid, vec: np.ndarray, lead: int = 0) -> np.ndarray:
    """Spectral divergence over the last axis (length 3)."""
    nd = vec.ndim - 1
    return sum(_ik(grid, i, nd, lead) * vec[..., i] for i in range(3))


def streaming(grid: FourierGrid, vgrid: VelocityGrid, values: np.ndarray, lead: int = 0) -> np.ndarray:
    """xi . grad_x f on a spectral array with trailing velocity axis."""
    symbol = np.zeros((1,) * values.ndim)
    for i in range(min(3, grid.spatial_dim)):
        symbol = symbol + _ik(grid, i, values.ndim, lead) * vgrid.nodes[:, i]
    return symbol * values


def _l2x(grid: FourierGrid, arr: np.ndarray, lead: int) -> np.ndarray:
    """Spatial L^2 norm by Parseval, summed in quadrature over trailing component axes."""
    axes = tuple(range(lead, arr.ndim))
    return np.sqrt(grid.volume * np.sum(np.abs(arr) ** 2, axis=axes))


@dataclass(frozen=True)
class FluidResidual:
    series: np.ndarray  # (n_t, 5)
    maximum: np.ndarray  # (5,)
    names: tuple = EQUATIONS


def fluid_source_moments(grid: FourierGrid, vgrid: VelocityGrid, micro: np.ndarray, l_micro: np.ndarray,
                         gamma_hat: np.ndarray, lead: int = 0) -> MomentSet:
    """Theta and Lambda of r + h with r = -xi.grad {I-P}f and h = -L{I-P}f + Gamma(f, f)."""
    src = -streaming(grid, vgrid, micro, lead) - l_micro + gamma_hat
    return moment_values(src, vgrid)


def residuals_from_moments(grid: FourierGrid, times: np.ndarray, co: MacroCoeffs, mic: MomentSet,
                           src: MomentSet) -> FluidResidual:
    """LHS - RHS of the five moment equations from stacked (time-leading) moment records."""
    times = np.asarray(times, dtype=float)
    if times.size < 3:
        raise ValueError("fluid residuals need at least 3 snapshots")
    dt = lambda arr: np.gradient(arr, times, axis=0)  # noqa: E731
    lead = 1
    grad_a = gradient3(grid, co.a, lead)
    grad_c = gradient3(grid, co.c, lead)
    div_b = divergence3(grid, co.b, lead)
    div_theta = np.stack([divergence3(grid, mic.theta[..., i, :], lead) for i in range(3)], axis=-1)
    div_lam = divergence3(grid, mic.lam, lead)
    grad_b = np.stack([gradient3(grid, co.b[..., m], lead) for m in range(3)], axis=-1)  # [..., i, m]
    eye = np.eye(3)
    r_mass = dt(co.a) + div_b
    r_mom = dt(co.b) + grad_a + 2.0 * grad_c + div_theta
    r_energy = dt(co.c) + div_b / 3.0 + C_LAMBDA * div_lam
    r_theta = dt(mic.theta + 2.0 * co.c[..., None, None] * eye) + grad_b + np.swapaxes(grad_b, -1, -2) \
        - src.theta
    r_lam = dt(mic.lam) + grad_c - src.lam
    series = np.stack([_l2x(grid, r, lead) for r in (r_mass, r_mom, r_energy, r_theta, r_lam)], axis=1)
    return FluidResidual(series, series.max(axis=0))


def fluid_residual(traj, tables, gamma_values=None, conservative: bool = True) -> FluidResidual:
    """Residuals of the fluid-type system along a trajectory.

    ``gamma_values`` may hold precomputed Gamma(f, f) spectral snapshots; by
    default they are evaluated from the collision tables.
    """
    from .collision import gamma_field

    grid, vgrid = traj.grid, traj.vgrid
    if traj.times.size < 3:
        raise ValueError("fluid residuals need at least 3 snapshots")
    values = traj.values
    co, _, micro = project_values(values, vgrid)
    l_micro = tables.apply_L(micro)
    if gamma_values is None:
        gamma_values = np.stack([gamma_field(tables, grid, v, v, conservative=conservative) for v in values])
    mic = moment_values(micro, vgrid)
    src = fluid_source_moments(grid, vgrid, micro, l_micro, gamma_values, lead=1)
    return residuals_from_moments(grid, traj.times, co, mic, src)


def interactive_functional(snapshot: SpectralField, q: int, params: InteractiveParams,
                           vgrid: VelocityGrid, sys: DyadicSystem) -> float:
    """Temporal interactive functional of one dyadic block of a snapshot."""
    grid = snapshot.grid
    block = snapshot.values * grid.expand(sys.block_multiplier(q), snapshot.values.ndim)
    co, _, micro = project_values(block, vgrid)
    mic = moment_values(micro, vgrid)
    grad_c = gradient3(grid, co.c)
    grad_a = gradient3(grid, co.a)
    grad_b = np.stack([gradient3(grid, co.b[..., m]) for m in range(3)], axis=-1)
    sym_b = grad_b + np.swapaxes(grad_b, -1, -2)
    inner = lambda u, v: grid.volume * float(np.sum((u * np.conj(v)).real))  # noqa: E731
    return (inner(grad_c, mic.lam) + params.kappa1 * inner(sym_b, mic.theta)
            + params.kappa2 * inner(grad_a, co.b))
