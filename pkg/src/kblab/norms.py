"""Besov, Chemin-Lerner and classical mixed norms, and the energy functionals.

All norms reduce a table of dyadic block norms ``B[q, t, xi]`` =
||Delta_q f(t, ., xi)||_{L^p_x}.  The Chemin-Lerner norm integrates in
velocity and time per block and sums over q last; the classical norm sums
over q first.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._validation import check_exponent, check_real
from .collision.grids import VelocityGrid
from .lp import DyadicSystem, FourierGrid, SpectralField, build_dyadic_system
from .macro import gradient3, project_values


@dataclass(frozen=True)
class BesovSpec:
    s: float = 1.5
    p: float = 2.0
    r: float = 1.0
    homogeneous: bool = False

    def __post_init__(self):
        check_real(self.s, "s")
        check_exponent(self.p, "p")
        check_exponent(self.r, "r")


@dataclass(frozen=True)
class CLSpec:
    rho1: float = math.inf
    rho2: float = 2.0
    besov: BesovSpec = field(default_factory=BesovSpec)
    nu_weighted: bool = False

    def __post_init__(self):
        check_exponent(self.rho1, "rho1")
        check_exponent(self.rho2, "rho2")


@dataclass(frozen=True, eq=False)
class DistributionTrajectory:
    """Spectral snapshots ``values[t, *x, xi]`` at increasing times."""

    times: np.ndarray
    values: np.ndarray
    grid: FourierGrid
    vgrid: VelocityGrid

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float).ravel()
        values = np.asarray(self.values, dtype=complex)
        if times.size == 0:
            raise ValueError("trajectory needs at least one snapshot")
        if np.any(np.diff(times) <= 0):
            raise ValueError("trajectory times must be strictly increasing")
        expected = (times.size,) + self.grid.shape + (self.vgrid.size,)
        if values.shape != expected:
            raise ValueError(f"trajectory values have shape {values.shape}, expected {expected}")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "values", values)

    @classmethod
    def from_fields(cls, times, fields, vgrid: VelocityGrid) -> "DistributionTrajectory":
        fields = list(fields)
        grids = {f.grid for f in fields}
        if len(grids) != 1:
            raise ValueError("all snapshots must share one spatial grid")
        return cls(times, np.stack([f.values for f in fields]), fields[0].grid, vgrid)

    @property
    def fields(self) -> list[SpectralField]:
        return [SpectralField(self.grid, v) for v in self.values]

    @property
    def horizon(self) -> float:
        return float(self.times[-1] - self.times[0])

    def __len__(self) -> int:
        return self.times.size

    def with_values(self, values: np.ndarray) -> "DistributionTrajectory":
        return DistributionTrajectory(self.times, values, self.grid, self.vgrid)


# elementary reductions ---------------------------------------------------
def weighted_lp(values: np.ndarray, weights: np.ndarray | None, p: float, axis: int = -1) -> np.ndarray:
    """(sum_i w_i |v_i|^p)^(1/p) along an axis; max |v| for p = inf."""
    v = np.abs(np.moveaxis(values, axis, -1))
    if math.isinf(p):
        return v.max(axis=-1) if v.shape[-1] else np.zeros(v.shape[:-1])
    w = np.ones(v.shape[-1]) if weights is None else np.asarray(weights, dtype=float)
    return (v ** p @ w) ** (1.0 / p)


def trapezoid_weights(times: np.ndarray) -> np.ndarray:
    times = np.asarray(times, dtype=float)
    w = np.zeros(times.size)
    if times.size > 1:
        h = np.diff(times)
        w[:-1] += 0.5 * h
        w[1:] += 0.5 * h
    return w


def block_weights(indices, s: float) -> np.ndarray:
    return 2.0 ** (np.asarray(indices, dtype=float) * s)


def _system(grid: FourierGrid, sys: DyadicSystem | None) -> DyadicSystem:
    if sys is None:
        return build_dyadic_system(grid)
    if sys.grid != grid:
        raise ValueError("dyadic system was built on a different grid")
    return sys


def block_norms(values: np.ndarray, grid: FourierGrid, p: float = 2.0, lead: int = 0,
                sys: DyadicSystem | None = None, homogeneous: bool = False):
    """(indices, B) with B[q, *lead, *trail] = ||Delta_q f||_{L^p_x}.

    ``values`` are spectral coefficients laid out as (*lead, *x, *trail).
    """
    sys = _system(grid, sys)
    idx, mults = sys.multipliers(homogeneous)
    values = np.asarray(values)
    d = grid.spatial_dim
    lead_shape = values.shape[:lead]
    trail_shape = values.shape[lead + d:]
    flat = values.reshape(lead_shape + (grid.size,) + trail_shape)
    m = mults.reshape(len(idx), grid.size)
    if p == 2.0:
        power = np.abs(flat) ** 2
        out = np.tensordot(m ** 2, np.moveaxis(power, lead, 0), axes=(1, 0))
        return idx, np.sqrt(grid.volume * out)
    out = []
    for mult in mults:
        phys = grid.inverse(values * grid.expand(mult, values.ndim, lead), lead, real=False)
        a = np.abs(phys).reshape(lead_shape + (grid.size,) + trail_shape)
        a = np.moveaxis(a, lead, -1)
        out.append(a.max(axis=-1) if math.isinf(p) else (grid.cell_volume * np.sum(a ** p, axis=-1)) ** (1.0 / p))
    return idx, np.stack(out)


def besov_norm(f: SpectralField | np.ndarray, spec: BesovSpec, grid: FourierGrid | None = None,
               vgrid: VelocityGrid | None = None, sys: DyadicSystem | None = None) -> float:
    """||f||_{B^s_{p,r}}; for (x, xi) fields the L^2_xi norm is taken pointwise in x first."""
    if isinstance(f, SpectralField):
        grid, values = f.grid, f.values
    else:
        values = np.asarray(f)
    if grid is None:
        raise ValueError("a FourierGrid is required for raw arrays")
    sys = _system(grid, sys)
    has_xi = values.ndim > grid.spatial_dim
    if has_xi and vgrid is None:
        raise ValueError("a VelocityGrid is required for (x, xi) fields")
    if not has_xi:
        idx, B = block_norms(values, grid, spec.p, sys=sys, homogeneous=spec.homogeneous)
    elif spec.p == 2.0:
        idx, B = block_norms(values, grid, 2.0, sys=sys, homogeneous=spec.homogeneous)
        B = weighted_lp(B, vgrid.weights, 2.0)
    else:
        idx, mults = sys.multipliers(spec.homogeneous)
        rows = []
        for mult in mults:
            phys = grid.inverse(values * grid.expand(mult, values.ndim), real=False)
            pointwise = weighted_lp(phys, vgrid.weights, 2.0)
            rows.append(weighted_lp(pointwise.ravel(), None if math.isinf(spec.p) else
                                    np.full(grid.size, grid.cell_volume), spec.p))
        B = np.array(rows)
    return float(weighted_lp(block_weights(idx, spec.s) * B, None, spec.r))


def _velocity_weights(vgrid: VelocityGrid, nu_weighted: bool, nu) -> np.ndarray:
    if not nu_weighted:
        return vgrid.weights
    if nu is None:
        raise ValueError("nu-weighted norm requested but no collision frequency supplied")
    nu = getattr(nu, "nu", nu)
    return vgrid.weights * np.asarray(nu, dtype=float)


def _time_norm(values: np.ndarray, times: np.ndarray, rho1: float) -> np.ndarray:
    """Reduce the last axis (time) with trapezoid weights or sup."""
    return weighted_lp(values, None if math.isinf(rho1) else trapezoid_weights(times), rho1)


def trajectory_blocks(traj: DistributionTrajectory, spec: CLSpec, sys: DyadicSystem | None = None):
    idx, B = block_norms(traj.values, traj.grid, spec.besov.p, lead=1, sys=sys,
                         homogeneous=spec.besov.homogeneous)
    return idx, B  # (Q, n_t, N)


def chemin_lerner_from_blocks(idx, B: np.ndarray, times, xi_weights, spec: CLSpec) -> float:
    """Chemin-Lerner reduction of B[q, t, xi]: xi, then t, then the weighted l^r sum."""
    v = weighted_lp(B, xi_weights, spec.rho2)  # (Q, n_t)
    t = _time_norm(v, times, spec.rho1)  # (Q,)
    return float(weighted_lp(block_weights(idx, spec.besov.s) * t, None, spec.besov.r))


def classical_from_blocks(idx, B: np.ndarray, times, xi_weights, spec: CLSpec) -> float:
    """Classical reduction of B[q, t, xi]: the weighted l^r sum first, then xi, then t."""
    w = block_weights(idx, spec.besov.s)[:, None, None]
    b = weighted_lp(w * B, None, spec.besov.r, axis=0)  # (n_t, N)
    v = weighted_lp(b, xi_weights, spec.rho2)  # (n_t,)
    return float(_time_norm(v, times, spec.rho1))


def chemin_lerner_norm(traj: DistributionTrajectory, spec: CLSpec, nu=None,
                       sys: DyadicSystem | None = None) -> float:
    xi_w = _velocity_weights(traj.vgrid, spec.nu_weighted, nu)
    idx, B = trajectory_blocks(traj, spec, sys)
    return chemin_lerner_from_blocks(idx, B, traj.times, xi_w, spec)


def classical_norm(traj: DistributionTrajectory, spec: CLSpec, nu=None,
                   sys: DyadicSystem | None = None) -> float:
    xi_w = _velocity_weights(traj.vgrid, spec.nu_weighted, nu)
    idx, B = trajectory_blocks(traj, spec, sys)
    return classical_from_blocks(idx, B, traj.times, xi_w, spec)


# energy functionals --------------------------------------------------------
@dataclass(frozen=True)
class EnergyRecord:
    E_T: float
    D_T: float
    D_tilde_T: float

    @property
    def Y_T(self) -> float:
        return self.E_T + self.D_T

    @property
    def Y_tilde_T(self) -> float:
        return self.E_T + self.D_tilde_T

    def as_dict(self) -> dict:
        return {"E_T": self.E_T, "D_T": self.D_T, "D_tilde_T": self.D_tilde_T,
                "Y_T": self.Y_T, "Y_tilde_T": self.Y_tilde_T}


@dataclass(frozen=True)
class SnapshotBlocks:
    """Per-snapshot block quantities that feed every energy functional.

    full[q]  = ||Delta_q f||_{L^2_xi L^2_x}
    micro[q] = ||Delta_q {I-P}f||_{L^2_{xi,nu} L^2_x}
    full_nu[q] = ||Delta_q f||_{L^2_{xi,nu} L^2_x}
    grad[q]  = ||Delta_q grad_x (a, b, c)||_{L^2_x}
    """

    indices: np.ndarray
    full: np.ndarray
    micro: np.ndarray
    full_nu: np.ndarray
    grad: np.ndarray


def snapshot_blocks(values: np.ndarray, grid: FourierGrid, vgrid: VelocityGrid, nu,
                    sys: DyadicSystem | None = None, lead: int = 0) -> SnapshotBlocks:
    """Block quantities for spectral snapshots (*lead, *x, N); block axis first."""
    sys = _system(grid, sys)
    nu = np.asarray(getattr(nu, "nu", nu), dtype=float)
    co, _, micro = project_values(values, vgrid)
    idx, Bf = block_norms(values, grid, 2.0, lead=lead, sys=sys)
    _, Bm = block_norms(micro, grid, 2.0, lead=lead, sys=sys)
    grads = np.concatenate([gradient3(grid, co.a, lead)[..., None, :],
                            np.stack([gradient3(grid, co.b[..., m], lead) for m in range(3)], axis=-2),
                            gradient3(grid, co.c, lead)[..., None, :]], axis=-2)
    _, Bg = block_norms(grads, grid, 2.0, lead=lead, sys=sys)
    w = vgrid.weights
    return SnapshotBlocks(idx, weighted_lp(Bf, w, 2.0), weighted_lp(Bm, w * nu, 2.0),
                          weighted_lp(Bf, w * nu, 2.0),
                          np.sqrt(np.sum(Bg.reshape(Bg.shape[: 1 + lead] + (-1,)) ** 2, axis=-1)))


def energy_series(times: np.ndarray, blocks: SnapshotBlocks):
    """Running (E_t, D_t, D~_t) and the instantaneous energy for time-stacked blocks.

    Block arrays have shape (Q, n_t).  The running functionals use the
    window [t_0, t_i]; the instantaneous energy is ||f(t_i)||_{L~^2_xi B^{3/2}}.
    """
    times = np.asarray(times, dtype=float)
    w32 = block_weights(blocks.indices, 1.5)[:, None]
    w12 = block_weights(blocks.indices, 0.5)[:, None]
    inst = np.sum(w32 * blocks.full, axis=0)
    E = np.sum(w32 * np.maximum.accumulate(blocks.full, axis=1), axis=0)

    def cum_l2(b):
        sq = b ** 2
        acc = np.zeros_like(sq)
        if times.size > 1:
            acc[:, 1:] = np.cumsum(0.5 * np.diff(times) * (sq[:, 1:] + sq[:, :-1]), axis=1)
        return np.sqrt(acc)

    D = np.sum(w12 * cum_l2(blocks.grad), axis=0) + np.sum(w32 * cum_l2(blocks.micro), axis=0)
    Dt = np.sum(w32 * cum_l2(blocks.full_nu), axis=0)
    return E, D, Dt, inst


def energy_functionals(traj: DistributionTrajectory, nu, sys: DyadicSystem | None = None) -> EnergyRecord:
    """E_T, D_T and D~_T over the whole trajectory (Y_T, Y~_T as properties)."""
    blocks = snapshot_blocks(traj.values, traj.grid, traj.vgrid, nu, sys, lead=1)
    E, D, Dt, _ = energy_series(traj.times, blocks)
    return EnergyRecord(float(E[-1]), float(D[-1]), float(Dt[-1]))


def initial_norm(values: np.ndarray, grid: FourierGrid, vgrid: VelocityGrid,
                 sys: DyadicSystem | None = None) -> float:
    """||f_0||_{L~^2_xi(B^{3/2})}."""
    return besov_norm(values, BesovSpec(1.5, 2.0, 1.0), grid=grid, vgrid=vgrid, sys=sys)


# series convolution -----------------------------------------------------------
def c1_sequence(B_time_xi: np.ndarray, idx, times, xi_weights, s: float, denominator: float) -> np.ndarray:
    """c_1(j) = 2^{js} ||Delta_j g||_{L^2_T L^2_{xi, w}} / denominator from blocks B[j, t, xi]."""
    v = weighted_lp(B_time_xi, xi_weights, 2.0)
    t = _time_norm(v, times, 2.0)
    return block_weights(idx, s) * t / denominator


def series_convolution(c: np.ndarray, idx, s: float, width: int = 4) -> tuple[float, float]:
    """(sum_q sum_{|j-q|<=width} 2^{(q-j)s} c(j), ||1_{|j|<=width} 2^{js}||_{l^1} ||c||_{l^1}).

    The outer sum runs over q >= -1 as in the dyadic decomposition.
    """
    c = np.asarray(c, dtype=float)
    idx = np.asarray(idx)
    lhs = 0.0
    for q in range(-1, int(idx.max()) + width + 1):
        sel = np.abs(idx - q) <= width
        lhs += float(np.sum(2.0 ** ((q - idx[sel]) * s) * c[sel]))
    kernel = float(np.sum(2.0 ** (np.arange(-width, width + 1) * s)))
    return lhs, kernel * float(np.sum(np.abs(c)))
