"""Velocity lattice, sphere quadrature and collision-kernel parameters."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable

import numpy as np

from .._validation import check_int, check_real

GOLDEN_ANGLE = math.pi * (3.0 - math.sqrt(5.0))


@dataclass(frozen=True)
class VelocityGrid:
    """Cell-centred cubic lattice on [-R, R]^3 with midpoint weights."""

    half_width: float = 6.0
    points_per_axis: int = 12

    def __post_init__(self):
        check_real(self.half_width, "half_width", low=0.0, strict_low=True)
        check_int(self.points_per_axis, "points_per_axis", 2)

    @property
    def spacing(self) -> float:
        return 2.0 * self.half_width / self.points_per_axis

    @property
    def size(self) -> int:
        return self.points_per_axis ** 3

    @cached_property
    def axis(self) -> np.ndarray:
        h = self.spacing
        return -self.half_width + h * (np.arange(self.points_per_axis) + 0.5)

    @cached_property
    def nodes(self) -> np.ndarray:
        """(N, 3) node coordinates in C order over (i, j, k)."""
        x = self.axis
        return np.stack(np.meshgrid(x, x, x, indexing="ij"), axis=-1).reshape(-1, 3)

    @cached_property
    def weights(self) -> np.ndarray:
        return np.full(self.size, self.spacing ** 3)

    @cached_property
    def speed_sq(self) -> np.ndarray:
        return np.sum(self.nodes ** 2, axis=1)

    @cached_property
    def mu(self) -> np.ndarray:
        return np.exp(-0.5 * self.speed_sq) / (2.0 * math.pi) ** 1.5

    @cached_property
    def sqrt_mu(self) -> np.ndarray:
        return np.sqrt(self.mu)

    def mass_error(self) -> float:
        return abs(float(self.weights @ self.mu) - 1.0)

    def inner(self, f: np.ndarray, g: np.ndarray) -> np.ndarray:
        """Quadrature inner product over the trailing velocity axis."""
        return (f * np.conj(g)).real @ self.weights if np.iscomplexobj(f) or np.iscomplexobj(g) \
            else (f * g) @ self.weights

    def invariant_basis(self) -> np.ndarray:
        """(5, N) collision invariants {1, xi_1, xi_2, xi_3, |xi|^2} times sqrt(mu)."""
        v = self.nodes
        return np.stack([np.ones(self.size), v[:, 0], v[:, 1], v[:, 2], self.speed_sq]) * self.sqrt_mu


@dataclass(frozen=True)
class SphereQuadrature:
    """Antipodal Fibonacci lattice with equal weights 4*pi/N.

    The first half of the nodes lies in the upper hemisphere at heights
    z_i = 1 - (2i+1)/N; the second half is its mirror image -omega.
    """

    n_nodes: int = 26

    def __post_init__(self):
        check_int(self.n_nodes, "n_nodes", 2)
        if self.n_nodes % 2:
            raise ValueError(f"n_nodes must be even for the antipodal lattice, got {self.n_nodes}")

    @cached_property
    def half_nodes(self) -> np.ndarray:
        m = self.n_nodes // 2
        i = np.arange(m)
        z = 1.0 - (2.0 * i + 1.0) / self.n_nodes
        rho = np.sqrt(1.0 - z * z)
        phi = i * GOLDEN_ANGLE
        return np.stack([rho * np.cos(phi), rho * np.sin(phi), z], axis=1)

    @cached_property
    def nodes(self) -> np.ndarray:
        return np.concatenate([self.half_nodes, -self.half_nodes])

    @cached_property
    def weights(self) -> np.ndarray:
        return np.full(self.n_nodes, 4.0 * math.pi / self.n_nodes)


def abs_cos(theta):
    return np.abs(np.cos(theta))


@dataclass(frozen=True)
class KernelParams:
    """Kernel |xi - xi_*|^gamma B0(theta) with 0 <= B0 <= C |cos theta|."""

    gamma: float = 1.0
    angular_factor: Callable = abs_cos
    bound_constant: float = 1.0
    name: str = "abs_cos"

    def __post_init__(self):
        check_real(self.gamma, "gamma", low=0.0, high=1.0)
        check_real(self.bound_constant, "bound_constant", low=0.0)
        theta = np.linspace(0.0, math.pi, 721)
        b = np.asarray(self.angular_factor(theta), dtype=float)
        if np.any(b < 0) or np.any(b > self.bound_constant * np.abs(np.cos(theta)) + 1e-12):
            raise ValueError("angular factor violates 0 <= B0(theta) <= C|cos theta|")

    def angular_weights(self, sph: SphereQuadrature) -> np.ndarray:
        """Folded weights on the upper half lattice: w (B0(theta) + B0(pi - theta))."""
        theta = np.arccos(np.clip(sph.half_nodes[:, 2], -1.0, 1.0))
        b = np.asarray(self.angular_factor(theta), dtype=float) \
            + np.asarray(self.angular_factor(math.pi - theta), dtype=float)
        return sph.weights[: sph.n_nodes // 2] * b

    def describe(self) -> dict:
        return {"gamma": self.gamma, "angular_factor": self.name,
                "bound_constant": self.bound_constant}
