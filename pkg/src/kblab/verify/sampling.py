"""Seeded trial fields and the grid levels the inequality checks run on."""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .._random import stream
from .._validation import check_int, check_real
from ..collision import CollisionTables, KernelParams, SphereQuadrature, VelocityGrid, build_tables
from ..lp import DyadicSystem, FourierGrid, build_dyadic_system
from ..macro import project_values
from ..norms import DistributionTrajectory
from ..solver import band_limited_coefficients, hermite_profiles

FIELD_CLASSES = ("general", "macroscopic-only", "microscopic-only", "trajectory")
_CLASS_CODE = {name: i for i, name in enumerate(FIELD_CLASSES)}
_SCALAR_CODE = len(FIELD_CLASSES)


@dataclass(frozen=True)
class TrialSpec:
    """Sampling parameters shared by every check of a run.

    ``velocity_degree`` bounds the total degree of the Hermite profiles,
    ``k_max`` the spatial band, ``n_times`` the snapshots of synthetic
    trajectories over [0, horizon]; solver trajectories step with ``dt``.
    """

    seed: int = 0
    n_trials: int = 100
    spectral_decay: float = 2.0
    amplitude: float = 1e-3
    field_class: str = "general"
    k_max: float = 4.0
    velocity_degree: int = 2
    n_times: int = 5
    horizon: float = 0.1
    dt: float = 1e-2
    refine_trials: int = 10

    def __post_init__(self):
        check_int(self.seed, "seed", 0)
        check_int(self.n_trials, "n_trials", 1)
        check_real(self.spectral_decay, "spectral_decay", low=0.0, strict_low=True)
        check_real(self.amplitude, "amplitude", low=0.0)
        check_real(self.k_max, "k_max", low=0.0, strict_low=True)
        check_int(self.velocity_degree, "velocity_degree", 0)
        check_int(self.n_times, "n_times", 1)
        check_real(self.horizon, "horizon", low=0.0, strict_low=True)
        check_real(self.dt, "dt", low=0.0, strict_low=True)
        check_int(self.refine_trials, "refine_trials", 0)
        if self.field_class not in FIELD_CLASSES:
            raise ValueError(f"field_class must be one of {FIELD_CLASSES}, got {self.field_class!r}")
        steps = self.horizon / self.dt
        if abs(steps - round(steps)) > 1e-9 * steps or round(steps) < 2:
            raise ValueError("horizon must be an integer multiple (>= 2) of dt")


@lru_cache(maxsize=8)
def _tables(R: float, n: int, sphere: int, gamma: float, gamma_order: int) -> CollisionTables:
    return build_tables(VelocityGrid(R, n), SphereQuadrature(sphere), KernelParams(gamma),
                        gamma_order=gamma_order)


@lru_cache(maxsize=8)
def _dyadic(grid: FourierGrid) -> DyadicSystem:
    return build_dyadic_system(grid)


@dataclass(frozen=True)
class Level:
    """One resolution: spatial grid, dyadic system and the two table sets.

    ``tables`` (trilinear Gamma) serve the nonlinear checks; ``linear_tables``
    on a finer velocity lattice serve the checks that only need L and K.
    """

    grid: FourierGrid
    velocity: tuple
    linear_velocity: tuple
    sphere_nodes: int
    gamma: float
    gamma_order: int

    @property
    def sys(self) -> DyadicSystem:
        return _dyadic(self.grid)

    @property
    def tables(self) -> CollisionTables:
        return _tables(*self.velocity, self.sphere_nodes, self.gamma, self.gamma_order)

    @property
    def linear_tables(self) -> CollisionTables:
        return _tables(*self.linear_velocity, self.sphere_nodes, self.gamma, 3)

    def describe(self) -> dict:
        return {"spatial_dim": self.grid.spatial_dim, "points_per_axis": self.grid.points_per_axis,
                "velocity": list(self.velocity), "linear_velocity": list(self.linear_velocity),
                "sphere_nodes": self.sphere_nodes, "gamma": self.gamma}


@dataclass(frozen=True)
class VerifyGrids:
    """Base and refined resolutions; refinement doubles the spatial grid."""

    spatial_dim: int = 1
    points_per_axis: int = 32
    velocity: tuple = (4.55, 7)
    linear_velocity: tuple = (6.0, 12)
    refined_velocity: tuple = (4.5, 9)
    refined_linear_velocity: tuple = (6.0, 16)
    sphere_nodes: int = 26
    gamma: float = 1.0
    gamma_order: int = 1

    def level(self, refined: bool = False) -> Level:
        n = self.points_per_axis * (2 if refined else 1)
        return Level(FourierGrid(self.spatial_dim, n),
                     tuple(self.refined_velocity if refined else self.velocity),
                     tuple(self.refined_linear_velocity if refined else self.linear_velocity),
                     self.sphere_nodes, float(self.gamma), self.gamma_order)


# sampling ------------------------------------------------------------------
def _time_profiles(times: np.ndarray, horizon: float, n_modes: int = 3) -> np.ndarray:
    """(n_t, n_modes) smooth time factors cos(m pi t / T) / (1 + m)."""
    m = np.arange(n_modes)
    return np.cos(np.pi * np.outer(times / horizon, m)) / (1.0 + m)


def _apply_class(values: np.ndarray, vgrid: VelocityGrid, field_class: str) -> np.ndarray:
    if field_class == "macroscopic-only":
        return project_values(values, vgrid)[1]
    if field_class == "microscopic-only":
        return project_values(values, vgrid)[2]
    return values


def sample_field(spec: TrialSpec, grid: FourierGrid, vgrid: VelocityGrid, trial: int = 0, role: int = 0,
                 n_times: int | None = None, field_class: str | None = None, degree: int | None = None):
    """Random field for (seed, trial, role): a snapshot (*x, N) or, with n_times > 1, a trajectory.

    Coefficients decay like (1 + |k|)^-decay for |k| <= k_max and carry
    Hermite velocity profiles of total degree <= ``degree`` weighted by
    (1 + index)^-1/2.  Trajectories vary the spatial coefficients smoothly in
    time while keeping the velocity profiles, so the velocity rank stays
    bounded.  Amplitude 0 gives the zero field.
    """
    field_class = spec.field_class if field_class is None else field_class
    if field_class not in FIELD_CLASSES[:3]:
        raise ValueError(f"sample_field draws {FIELD_CLASSES[:3]}; solver trajectories come from solver_trial")
    degree = spec.velocity_degree if degree is None else degree
    n_times = 1 if n_times is None else n_times
    rng = stream(spec.seed, trial, role, _CLASS_CODE[field_class], degree)
    prof = hermite_profiles(vgrid, degree)
    pw = 1.0 / np.sqrt(1.0 + np.arange(prof.shape[0]))
    n_modes = 1 if n_times == 1 else 3
    coef = band_limited_coefficients(rng, grid, spec.k_max, spec.spectral_decay, (n_modes,),
                                     (prof.shape[0],)) * pw
    if n_times == 1:
        values = coef[0] @ prof
    else:
        times = np.linspace(0.0, spec.horizon, n_times)
        tp = _time_profiles(times, spec.horizon, n_modes)
        values = np.tensordot(tp, coef, axes=(1, 0)) @ prof
    values = _apply_class(values, vgrid, field_class)
    scale = float(np.sqrt(np.sum(np.abs(values) ** 2 @ vgrid.weights) / n_times))
    if scale == 0.0 or spec.amplitude == 0.0:
        values = np.zeros_like(values)
    else:
        values = values * (spec.amplitude / scale)
    if n_times == 1:
        return values
    return DistributionTrajectory(np.linspace(0.0, spec.horizon, n_times), values, grid, vgrid)


def sample_scalar(spec: TrialSpec, grid: FourierGrid, trial: int = 0, role: int = 0,
                  n_times: int = 1) -> np.ndarray:
    """Random real spatial field(s): (*x) or (n_t, *x) spectral coefficients."""
    rng = stream(spec.seed, trial, role, _SCALAR_CODE)
    n_modes = 1 if n_times == 1 else 3
    coef = band_limited_coefficients(rng, grid, spec.k_max, spec.spectral_decay, (n_modes,))
    if n_times == 1:
        return spec.amplitude * coef[0] if spec.amplitude else np.zeros_like(coef[0])
    times = np.linspace(0.0, spec.horizon, n_times)
    values = np.tensordot(_time_profiles(times, spec.horizon, n_modes), coef, axes=(1, 0))
    return spec.amplitude * values if spec.amplitude else np.zeros_like(values)


def trial_amplitude(spec: TrialSpec, trial: int) -> float:
    """Solver trials cycle through amplitude x {0.1, 0.3, 1}."""
    return spec.amplitude * (0.1, 0.3, 1.0)[trial % 3]


def solver_trial(spec: TrialSpec, level: Level, trial: int):
    """(f0, trajectory, diagnostics) of a short solver run from seeded random data."""
    from ..solver import SolverConfig, direct_solve, random_data

    tables = level.tables
    f0 = random_data(level.grid, tables.vgrid, trial_amplitude(spec, trial),
                     seed=int(stream(spec.seed, trial, 97).integers(2 ** 31)), k_max=min(spec.k_max, 2.0),
                     decay=spec.spectral_decay, degree=spec.velocity_degree, sys=level.sys)
    cfg = SolverConfig(dt=spec.dt, T=spec.horizon, gamma_rtol=1e-6)
    traj, diag = direct_solve(f0, tables, cfg, level.sys)
    return f0, traj, diag
