"""Littlewood-Paley engine on the periodic torus.

Spatial fields are stored as Fourier coefficients with the normalization
``f(x) = sum_k fhat_k exp(i k.x)``.  The spatial axes always come first in a
``SpectralField``; trailing axes (velocity nodes, components) ride along.
Functions that act on stacked data (time series) take a ``lead`` argument
giving the number of leading non-spatial axes.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.special import expit
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_int, check_power_of_two, check_real

# radii of the dyadic construction
PLATEAU = 0.75
OUTER = 4.0 / 3.0
SHELL_OUTER = 8.0 / 3.0
RADII = (PLATEAU, OUTER, SHELL_OUTER)


@dataclass(frozen=True)
class FourierGrid:
    spatial_dim: int = 1
    points_per_axis: int = 64
    domain_length: float = 2.0 * math.pi

    def __post_init__(self):
        check_int(self.spatial_dim, "spatial_dim", 1)
        if self.spatial_dim > 3:
            raise ValueError("spatial_dim must be 1, 2 or 3")
        check_power_of_two(self.points_per_axis, "points_per_axis", 8)
        check_real(self.domain_length, "domain_length", low=0.0, strict_low=True)

    # geometry ---------------------------------------------------------
    @property
    def shape(self) -> tuple[int, ...]:
        return (self.points_per_axis,) * self.spatial_dim

    @property
    def size(self) -> int:
        return self.points_per_axis ** self.spatial_dim

    @property
    def volume(self) -> float:
        return self.domain_length ** self.spatial_dim

    @property
    def cell_volume(self) -> float:
        return self.volume / self.size

    @cached_property
    def mode_numbers(self) -> np.ndarray:
        """Integer mode numbers in FFT order, in [-N/2, N/2)."""
        n = self.points_per_axis
        return np.fft.fftfreq(n, d=1.0 / n).astype(np.int64)

    @cached_property
    def wavenumbers(self) -> np.ndarray:
        """Wavenumber vectors, shape (d, *shape)."""
        k1 = self.mode_numbers * (2.0 * math.pi / self.domain_length)
        mesh = np.meshgrid(*([k1] * self.spatial_dim), indexing="ij")
        return np.stack(mesh)

    @cached_property
    def nyquist_mask(self) -> np.ndarray:
        n = self.points_per_axis
        idx = np.meshgrid(*([np.arange(n)] * self.spatial_dim), indexing="ij")
        mask = np.zeros(self.shape, dtype=bool)
        for ax in idx:
            mask |= ax == n // 2
        return mask

    @cached_property
    def kmag(self) -> np.ndarray:
        """|k| with Nyquist entries kept (they are zeroed through multipliers)."""
        return np.sqrt(np.sum(self.wavenumbers ** 2, axis=0))

    @property
    def kmax(self) -> float:
        return float(self.kmag[~self.nyquist_mask].max())

    @property
    def kmin(self) -> float:
        k = self.kmag[~self.nyquist_mask]
        return float(k[k > 0].min())

    @cached_property
    def points(self) -> np.ndarray:
        x1 = np.arange(self.points_per_axis) * (self.domain_length / self.points_per_axis)
        return np.stack(np.meshgrid(*([x1] * self.spatial_dim), indexing="ij"))

    @property
    def padded_points(self) -> int:
        return 3 * self.points_per_axis // 2

    # transforms -------------------------------------------------------
    def _axes(self, lead: int) -> tuple[int, ...]:
        return tuple(range(lead, lead + self.spatial_dim))

    def expand(self, mult: np.ndarray, ndim: int, lead: int = 0) -> np.ndarray:
        """Reshape a grid-shaped multiplier to broadcast against an ndim array."""
        trailing = ndim - lead - self.spatial_dim
        return mult.reshape((1,) * lead + mult.shape + (1,) * trailing)

    def zero_nyquist(self, coeffs: np.ndarray, lead: int = 0) -> np.ndarray:
        keep = self.expand(~self.nyquist_mask, coeffs.ndim, lead)
        return np.where(keep, coeffs, 0.0)

    def forward(self, values: np.ndarray, lead: int = 0) -> np.ndarray:
        coeffs = np.fft.fftn(values, axes=self._axes(lead)) / self.size
        return self.zero_nyquist(coeffs, lead)

    def inverse(self, coeffs: np.ndarray, lead: int = 0, real: bool = True) -> np.ndarray:
        values = np.fft.ifftn(coeffs, axes=self._axes(lead)) * self.size
        return values.real if real else values

    # dealiasing -------------------------------------------------------
    def _pad_index(self, m: int):
        n = self.points_per_axis
        modes = np.arange(-n // 2 + 1, n // 2)
        return np.mod(modes, n), np.mod(modes, m)

    def pad(self, coeffs: np.ndarray, m: int, lead: int = 0) -> np.ndarray:
        src, dst = self._pad_index(m)
        shape = coeffs.shape[:lead] + (m,) * self.spatial_dim + coeffs.shape[lead + self.spatial_dim:]
        out = np.zeros(shape, dtype=complex)
        pre = (slice(None),) * lead
        out[pre + np.ix_(*([dst] * self.spatial_dim))] = coeffs[pre + np.ix_(*([src] * self.spatial_dim))]
        return out

    def truncate(self, coeffs: np.ndarray, m: int, lead: int = 0) -> np.ndarray:
        src, dst = self._pad_index(m)
        shape = coeffs.shape[:lead] + self.shape + coeffs.shape[lead + self.spatial_dim:]
        out = np.zeros(shape, dtype=complex)
        pre = (slice(None),) * lead
        out[pre + np.ix_(*([src] * self.spatial_dim))] = coeffs[pre + np.ix_(*([dst] * self.spatial_dim))]
        return out

    def to_padded_physical(self, coeffs: np.ndarray, lead: int = 0, real: bool = True) -> np.ndarray:
        m = self.padded_points
        padded = self.pad(coeffs, m, lead)
        values = np.fft.ifftn(padded, axes=self._axes(lead)) * m ** self.spatial_dim
        return values.real if real else values

    def from_padded_physical(self, values: np.ndarray, lead: int = 0) -> np.ndarray:
        m = self.padded_points
        coeffs = np.fft.fftn(values, axes=self._axes(lead)) / m ** self.spatial_dim
        return self.truncate(coeffs, m, lead)

    def product(self, u: np.ndarray, v: np.ndarray, lead: int = 0, real: bool = True) -> np.ndarray:
        """Dealiased (3/2-rule) product of two coefficient arrays."""
        pu = self.to_padded_physical(u, lead, real)
        pv = self.to_padded_physical(v, lead, real)
        return self.from_padded_physical(pu * pv, lead)

    def gradient(self, coeffs: np.ndarray, lead: int = 0) -> np.ndarray:
        """Spectral gradient; the component axis is inserted at position ``lead``."""
        k = self.zero_nyquist(self.wavenumbers, lead=1)
        comps = [1j * self.expand(k[i], coeffs.ndim, lead) * coeffs for i in range(self.spatial_dim)]
        return np.stack(comps, axis=lead)

    def l2_inner(self, u: np.ndarray, v: np.ndarray, lead: int = 0) -> np.ndarray:
        """Spatial L^2 inner product via Parseval; reduces the spatial axes."""
        prod = (u * np.conj(v)).real
        return self.volume * prod.sum(axis=self._axes(lead))


@dataclass(frozen=True, eq=False)
class SpectralField:
    grid: FourierGrid
    values: np.ndarray
    real: bool = True

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=complex)
        if vals.shape[: self.grid.spatial_dim] != self.grid.shape:
            raise ValueError(f"values shape {vals.shape} does not start with grid shape {self.grid.shape}")
        object.__setattr__(self, "values", vals)

    @classmethod
    def from_physical(cls, grid: FourierGrid, values, real: bool | None = None) -> "SpectralField":
        values = np.asarray(values)
        if real is None:
            real = not np.iscomplexobj(values)
        return cls(grid, grid.forward(values), real)

    def to_physical(self) -> np.ndarray:
        return self.grid.inverse(self.values, real=self.real)

    def with_values(self, values: np.ndarray) -> "SpectralField":
        return SpectralField(self.grid, values, self.real)

    def hermitian_error(self) -> float:
        """max |fhat(-k) - conj(fhat(k))| relative to max |fhat|."""
        idx = tuple(np.mod(-np.arange(self.grid.points_per_axis), self.grid.points_per_axis)
                    for _ in range(self.grid.spatial_dim))
        flipped = self.values[np.ix_(*idx)]
        scale = np.abs(self.values).max()
        if scale == 0:
            return 0.0
        return float(np.abs(flipped - np.conj(self.values)).max() / scale)

    def __add__(self, other: "SpectralField") -> "SpectralField":
        _check_same_grid(self, other)
        return SpectralField(self.grid, self.values + other.values, self.real and other.real)

    def __sub__(self, other: "SpectralField") -> "SpectralField":
        _check_same_grid(self, other)
        return SpectralField(self.grid, self.values - other.values, self.real and other.real)

    def __mul__(self, scalar) -> "SpectralField":
        return SpectralField(self.grid, self.values * scalar, self.real and np.isrealobj(scalar))

    __rmul__ = __mul__


def _check_same_grid(u: SpectralField, v: SpectralField) -> None:
    if u.grid != v.grid:
        raise ValueError(f"grid mismatch: {u.grid} vs {v.grid}")


def cutoff_profile(r, sharpness: float = 1.0) -> np.ndarray:
    """Radial profile: 1 on [0, 3/4], 0 on [4/3, inf), smooth monotone transition."""
    r = np.asarray(r, dtype=float)
    t = (OUTER - r) / (OUTER - PLATEAU)  # 1 at the plateau edge, 0 at the outer radius
    out = np.where(r <= PLATEAU, 1.0, 0.0)
    inside = (t > 0.0) & (t < 1.0)
    tt = np.where(inside, t, 0.5)
    with np.errstate(divide="ignore", over="ignore"):
        val = expit(sharpness / (1.0 - tt) - sharpness / tt)
    return np.where(inside, val, out)


class DyadicSystem:
    """Cutoff pair (chi, phi) with block multipliers tabulated on a grid."""

    radii = RADII

    def __init__(self, grid: FourierGrid, transition_sharpness: float = 1.0):
        self.grid = grid
        self.transition_sharpness = check_real(transition_sharpness, "transition_sharpness",
                                               low=0.0, strict_low=True)
        q_max = math.ceil(math.log2(grid.kmax / PLATEAU))
        if q_max < 0 or grid.kmax < PLATEAU:
            raise ValueError("grid under-resolved: no dyadic block q >= 0 fits on this grid")
        self.q_max = q_max
        # homogeneous blocks with nonempty support: 3/4 2^q < |k| < 8/3 2^q
        self.q_hom_min = math.floor(math.log2(grid.kmin / SHELL_OUTER)) + 1
        self.q_hom_max = q_max
        self._cache: dict = {}

    def chi(self, k) -> np.ndarray:
        return cutoff_profile(np.abs(k), self.transition_sharpness)

    def phi(self, k) -> np.ndarray:
        k = np.abs(np.asarray(k, dtype=float))
        return self.chi(k / 2.0) - self.chi(k)

    @property
    def block_indices(self) -> range:
        return range(-1, self.q_max + 1)

    @property
    def homogeneous_indices(self) -> range:
        return range(self.q_hom_min, self.q_hom_max + 1)

    def _masked(self, mult: np.ndarray) -> np.ndarray:
        return np.where(self.grid.nyquist_mask, 0.0, mult)

    def block_multiplier(self, q: int) -> np.ndarray:
        if not -1 <= q <= self.q_max:
            raise ValueError(f"block index q={q} outside [-1, {self.q_max}]")
        key = ("block", q)
        if key not in self._cache:
            k = self.grid.kmag
            mult = self.chi(k) if q == -1 else self.phi(k / 2.0 ** q)
            self._cache[key] = self._masked(mult)
        return self._cache[key]

    def lowpass_multiplier(self, q: int) -> np.ndarray:
        if not -1 <= q <= self.q_max + 1:
            raise ValueError(f"low-pass index q={q} outside [-1, {self.q_max + 1}]")
        key = ("low", q)
        if key not in self._cache:
            mult = np.zeros(self.grid.shape)
            for j in range(-1, q):
                mult = mult + self.block_multiplier(j)
            self._cache[key] = mult
        return self._cache[key]

    def homogeneous_multiplier(self, q: int) -> np.ndarray:
        key = ("hom", q)
        if key not in self._cache:
            mult = self.phi(self.grid.kmag / 2.0 ** q)
            self._cache[key] = self._masked(mult)
        return self._cache[key]

    def multipliers(self, homogeneous: bool = False) -> tuple[np.ndarray, np.ndarray]:
        """(indices, stacked multipliers) for every block of the chosen family."""
        idx = self.homogeneous_indices if homogeneous else self.block_indices
        get = self.homogeneous_multiplier if homogeneous else self.block_multiplier
        return np.array(list(idx)), np.stack([get(q) for q in idx])

    def partition_error(self) -> float:
        """max |chi + sum_q phi(2^-q k) - 1| over non-Nyquist grid wavenumbers."""
        total = sum(self.block_multiplier(q) for q in self.block_indices)
        return float(np.abs(total - 1.0)[~self.grid.nyquist_mask].max())


def build_dyadic_system(grid: FourierGrid, transition_sharpness: float = 1.0) -> DyadicSystem:
    return DyadicSystem(grid, transition_sharpness)


def _apply(sys: DyadicSystem, mult: np.ndarray, f: SpectralField) -> SpectralField:
    if f.grid != sys.grid:
        raise ValueError("field grid does not match the dyadic system grid")
    return f.with_values(f.values * sys.grid.expand(mult, f.values.ndim))


def dyadic_block(sys: DyadicSystem, q: int, f: SpectralField) -> SpectralField:
    return _apply(sys, sys.block_multiplier(q), f)


def low_pass(sys: DyadicSystem, q: int, f: SpectralField) -> SpectralField:
    return _apply(sys, sys.lowpass_multiplier(q), f)


def homogeneous_block(sys: DyadicSystem, q: int, f: SpectralField) -> SpectralField:
    return _apply(sys, sys.homogeneous_multiplier(q), f)


def _physical_blocks(sys: DyadicSystem, f: SpectralField) -> list[np.ndarray]:
    grid = sys.grid
    return [grid.to_padded_physical(f.values * grid.expand(sys.block_multiplier(q), f.values.ndim),
                                    real=f.real)
            for q in sys.block_indices]


def paraproduct(sys: DyadicSystem, u: SpectralField, v: SpectralField) -> SpectralField:
    """T_u v = sum_j S_{j-1}u Delta_j v, dealiased."""
    _check_same_grid(u, v)
    bu, bv = _physical_blocks(sys, u), _physical_blocks(sys, v)
    low = np.zeros_like(bu[0])  # S_{j-1} u, starting from S_{-2} = S_{-1} = 0
    acc = np.zeros(np.broadcast_shapes(bu[0].shape, bv[0].shape), dtype=np.result_type(bu[0], bv[0]))
    # list position i holds block j = i - 1; S_{j-1} = sum of blocks j' <= j - 2
    for i in range(len(bv)):
        if i >= 2:
            low = low + bu[i - 2]
            acc = acc + low * bv[i]
    return SpectralField(sys.grid, sys.grid.from_padded_physical(acc), u.real and v.real)


def remainder(sys: DyadicSystem, u: SpectralField, v: SpectralField) -> SpectralField:
    """R(u, v) = sum_{|j - j'| <= 1} Delta_j' u Delta_j v, dealiased."""
    _check_same_grid(u, v)
    bu, bv = _physical_blocks(sys, u), _physical_blocks(sys, v)
    n = len(bu)
    acc = np.zeros(np.broadcast_shapes(bu[0].shape, bv[0].shape), dtype=np.result_type(bu[0], bv[0]))
    for i in range(n):
        near = bu[i]
        if i > 0:
            near = near + bu[i - 1]
        if i + 1 < n:
            near = near + bu[i + 1]
        acc = acc + near * bv[i]
    return SpectralField(sys.grid, sys.grid.from_padded_physical(acc), u.real and v.real)


def product(u: SpectralField, v: SpectralField) -> SpectralField:
    _check_same_grid(u, v)
    return SpectralField(u.grid, u.grid.product(u.values, v.values, real=u.real and v.real),
                         u.real and v.real)


class LittlewoodPaley(TransformerMixin, BaseEstimator):
    """Transformer splitting real periodic fields into dyadic blocks.

    ``transform`` maps samples of shape (n_samples, *grid.shape) to
    (n_samples, n_blocks, *grid.shape); ``inverse_transform`` sums the blocks.
    """

    def __init__(self, spatial_dim=1, points_per_axis=64, domain_length=2.0 * math.pi,
                 transition_sharpness=1.0, homogeneous=False):
        self.spatial_dim = spatial_dim
        self.points_per_axis = points_per_axis
        self.domain_length = domain_length
        self.transition_sharpness = transition_sharpness
        self.homogeneous = homogeneous

    def fit(self, X=None, y=None):
        self.grid_ = FourierGrid(self.spatial_dim, self.points_per_axis, self.domain_length)
        self.system_ = build_dyadic_system(self.grid_, self.transition_sharpness)
        self.block_indices_, self._mults = self.system_.multipliers(self.homogeneous)
        if X is not None:
            self._check_X(X)
        return self

    def _check_X(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.shape[1:] != self.grid_.shape:
            raise ValueError(f"expected samples of shape {self.grid_.shape}, got {X.shape[1:]}")
        if not np.all(np.isfinite(X)):
            raise ValueError("input contains non-finite values")
        return X

    def transform(self, X):
        check_is_fitted(self, "system_")
        X = self._check_X(X)
        coeffs = self.grid_.forward(X, lead=1)
        stacked = coeffs[:, None] * self._mults[None]
        return self.grid_.inverse(stacked, lead=2)

    def inverse_transform(self, B):
        check_is_fitted(self, "system_")
        B = np.asarray(B, dtype=float)
        return B.sum(axis=1)
