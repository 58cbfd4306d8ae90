"""Collision tables: nu, K, L and the bilinear operator Gamma on a velocity grid."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..lp import SpectralField
from . import _kernels
from .grids import KernelParams, SphereQuadrature, VelocityGrid

STENCIL_BYTES = 8 + 4 + 4 + 6 * 8


@dataclass(frozen=True)
class StencilSet:
    ptr: np.ndarray
    weights: np.ndarray
    base_star: np.ndarray
    base_prime: np.ndarray
    fractions: np.ndarray

    @property
    def n_triples(self) -> int:
        return int(self.weights.size)


@dataclass(eq=False)
class CollisionTables:
    """Precomputed velocity-space operators for one (grid, sphere, kernel) triple.

    ``loss_matrix[p, s] = w_s |xi_p - xi_s|^gamma Q_B sqrt(mu_s)`` gives the
    loss term, ``nu = loss_matrix @ sqrt(mu)``.  ``k_matrix`` is the symmetric,
    conservative K with ``l_matrix = diag(nu) - k_matrix``; ``k_raw`` is the
    interpolation-scatter assembly before symmetrisation.  Post-collision
    values are interpolated from f / mu^weight_exponent, with Lagrange order
    ``interpolation_order`` for K and ``gamma_order`` for Gamma.
    """

    vgrid: VelocityGrid
    sphere: SphereQuadrature
    kernel: KernelParams
    nu: np.ndarray
    loss_matrix: np.ndarray
    k_matrix: np.ndarray
    l_matrix: np.ndarray
    k_raw: np.ndarray
    projector: np.ndarray
    angular_total: float
    clipped_fraction: float
    interpolation_order: int = 3
    weight_exponent: float = 0.0
    gamma_order: int = 3
    stencils: StencilSet | None = None
    _invariant_solve: tuple | None = field(default=None, repr=False)

    @property
    def size(self) -> int:
        return self.vgrid.size

    # linear operators on trailing velocity axis ------------------------
    def apply_L(self, f: np.ndarray) -> np.ndarray:
        return f @ self.l_matrix.T

    def apply_K(self, f: np.ndarray) -> np.ndarray:
        return f @ self.k_matrix.T

    def apply_nu(self, f: np.ndarray) -> np.ndarray:
        return f * self.nu

    def apply_P(self, f: np.ndarray) -> np.ndarray:
        return f @ self.projector.T

    def nu_at(self, points: np.ndarray) -> np.ndarray:
        """Collision frequency evaluated off the lattice by the same quadrature."""
        g = self.vgrid
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        dist = np.sqrt(np.sum((pts[:, None, :] - g.nodes[None, :, :]) ** 2, axis=-1))
        radial = dist ** self.kernel.gamma if self.kernel.gamma > 0 else np.ones_like(dist)
        return self.angular_total * (radial @ (g.weights * g.mu))

    def nu_bounds(self) -> tuple[float, float]:
        """min and max of nu / (1 + |xi|)^gamma over the nodes."""
        ratio = self.nu / (1.0 + np.sqrt(self.vgrid.speed_sq)) ** self.kernel.gamma
        return float(ratio.min()), float(ratio.max())

    # bilinear operator -------------------------------------------------
    def _kernel_args(self):
        g = self.vgrid
        sph = self.sphere.half_nodes
        ang = self.kernel.angular_weights(self.sphere)
        return (g.nodes, _triple_weight(g, self.weight_exponent), float(self.kernel.gamma), float(g.axis[0]),
                g.spacing, g.points_per_axis, g.half_width, sph, ang, self.angular_total, self.gamma_order)

    def gain_pairs(self, A: np.ndarray, B: np.ndarray) -> np.ndarray:
        """out[p, i, j] = Gamma_gain(A[:, i], B[:, j])(xi_p) for column blocks A, B."""
        sq = self.vgrid.mu ** self.weight_exponent
        a = np.ascontiguousarray(np.asarray(A, dtype=float) / sq[:, None])
        b = np.ascontiguousarray(np.asarray(B, dtype=float) / sq[:, None])
        if self.stencils is not None:
            st = self.stencils
            out = _kernels.gain_stored(a, b, st.ptr, st.weights, st.base_star, st.base_prime,
                                       st.fractions, self.vgrid.points_per_axis,
                                       self.gamma_order)
        else:
            out = _kernels.gain_direct(a, b, *self._kernel_args())
        return out * sq[:, None, None]

    def gamma_rows(self, F: np.ndarray, G: np.ndarray, rtol: float = 0.0,
                   conservative: bool = True, parts: bool = False):
        """Gamma(F[x], G[x]) for real row stacks F, G of shape (M, N).

        Rows are compressed with a truncated SVD (relative tolerance rtol) so
        the quadrature runs once per pair of basis vectors.  With
        ``conservative`` the discrete defect in the collision invariants is
        removed: the mass defect of Gamma(F, G) and the momentum/energy defect
        of the symmetric part (Gamma(F, G) + Gamma(G, F)) / 2, which are the
        parts that vanish for the continuous operator.
        """
        F = np.asarray(F, dtype=float)
        G = np.asarray(G, dtype=float)
        same = G is F or (G.shape == F.shape and np.array_equal(G, F))
        alpha, basis_f = _compress(F, rtol)
        beta, basis_g = (alpha, basis_f) if same else _compress(G, rtol)
        gain = self._gain_rows(alpha, basis_f, beta, basis_g, F.shape)
        loss = G * (F @ self.loss_matrix.T)
        if parts:
            return gain, loss
        out = gain - loss
        if conservative:
            if same:
                out = out - self.apply_P(out)
            else:
                swapped = self._gain_rows(beta, basis_g, alpha, basis_f, F.shape) \
                    - F * (G @ self.loss_matrix.T)
                mass, rest = self._split_projectors()
                out = out - out @ mass.T - 0.5 * (out + swapped) @ rest.T
        return out

    def _gain_rows(self, alpha, basis_f, beta, basis_g, shape):
        if alpha.shape[1] == 0 or beta.shape[1] == 0:
            return np.zeros(shape)
        pairs = self.gain_pairs(basis_f.T, basis_g.T)
        return np.einsum("xi,xj,pij->xp", alpha, beta, pairs, optimize=True)

    def _split_projectors(self):
        if self._invariant_solve is None:
            sq = self.vgrid.sqrt_mu
            w = self.vgrid.weights
            mass = np.outer(sq, sq * w) / float(sq @ (sq * w))
            self._invariant_solve = (mass, self.projector - mass)
        return self._invariant_solve

    def gamma(self, f: np.ndarray, g: np.ndarray, rtol: float = 0.0,
              conservative: bool = True) -> np.ndarray:
        """Gamma(f, g) on arrays whose trailing axis is the velocity grid."""
        f = np.asarray(f)
        g = np.asarray(g)
        shape = np.broadcast_shapes(f.shape, g.shape)
        n = self.size
        if shape[-1] != n:
            raise ValueError(f"velocity axis has length {shape[-1]}, expected {n}")
        if np.iscomplexobj(f) or np.iscomplexobj(g):
            fr, fi = np.real(f), np.imag(f)
            gr, gi = np.real(g), np.imag(g)
            real = self.gamma(fr, gr, rtol, conservative) - self.gamma(fi, gi, rtol, conservative)
            imag = self.gamma(fr, gi, rtol, conservative) + self.gamma(fi, gr, rtol, conservative)
            return real + 1j * imag
        F = np.broadcast_to(f, shape).reshape(-1, n)
        G = F if g is f else np.broadcast_to(g, shape).reshape(-1, n)
        return self.gamma_rows(F, G, rtol, conservative).reshape(shape)

    def collision_invariant_defect(self, values: np.ndarray) -> np.ndarray:
        """(values, zeta sqrt(mu))_xi for the five collision invariants."""
        basis = self.vgrid.invariant_basis()
        return values @ (basis * self.vgrid.weights).T


def _triple_weight(vgrid: VelocityGrid, alpha: float) -> np.ndarray:
    """w_s mu_s^(1/2 + alpha): quadrature weight of a triple for data f / mu^alpha."""
    return vgrid.weights * vgrid.mu ** (0.5 + alpha)


def _compress(F: np.ndarray, rtol: float):
    """F = alpha @ basis with orthonormal basis rows, dropping s < rtol s_max.

    Directions below 1e-14 s_max are rounding noise and always dropped.
    """
    if not np.any(F):
        return np.zeros((F.shape[0], 0)), np.zeros((0, F.shape[1]))
    if F.shape[0] == 1:
        return np.ones((1, 1)), F.copy()
    u, s, vt = np.linalg.svd(F, full_matrices=False)
    keep = s > max(rtol, 1e-14) * s[0]
    return u[:, keep] * s[keep], vt[keep]


def invariant_projector(vgrid: VelocityGrid) -> np.ndarray:
    """Matrix of the quadrature-orthogonal projection onto the five invariants."""
    basis = vgrid.invariant_basis()
    w = vgrid.weights
    gram = (basis * w) @ basis.T
    return basis.T @ np.linalg.solve(gram, basis * w)


def collision_frequency(vgrid: VelocityGrid, sph: SphereQuadrature, kp: KernelParams) -> np.ndarray:
    """nu on the lattice without the gain tables: Q_B sum_s w_s |xi - xi_s|^gamma mu_s."""
    diff = vgrid.nodes[:, None, :] - vgrid.nodes[None, :, :]
    dist = np.sqrt(np.sum(diff ** 2, axis=-1))
    radial = dist ** kp.gamma if kp.gamma > 0 else np.ones_like(dist)
    return float(kp.angular_weights(sph).sum()) * (radial @ (vgrid.weights * vgrid.mu))


def build_tables(vgrid: VelocityGrid | None = None, sph: SphereQuadrature | None = None,
                 kp: KernelParams | None = None, stencil_memory_limit: float = 4.0e8,
                 interpolation_order: int = 3, weight_exponent: float = 0.0,
                 gamma_order: int | None = None) -> CollisionTables:
    gamma_order = interpolation_order if gamma_order is None else gamma_order
    for name, val in (("interpolation_order", interpolation_order), ("gamma_order", gamma_order)):
        if val not in (1, 3):
            raise ValueError(f"{name} must be 1 or 3, got {val}")
    vgrid = vgrid or VelocityGrid()
    sph = sph or SphereQuadrature()
    kp = kp or KernelParams()
    nodes = vgrid.nodes
    n = vgrid.size
    gamma = float(kp.gamma)
    ang = kp.angular_weights(sph)
    qb = float(ang.sum())
    lo = float(vgrid.axis[0])
    h = vgrid.spacing
    wmu = _triple_weight(vgrid, weight_exponent)
    wa = vgrid.mu ** weight_exponent
    sq = vgrid.sqrt_mu

    diff = nodes[:, None, :] - nodes[None, :, :]
    dist = np.sqrt(np.sum(diff ** 2, axis=-1))
    radial = dist ** gamma if gamma > 0 else np.ones_like(dist)
    loss = radial * (qb * vgrid.weights * sq)[None, :]
    nu = loss @ sq

    box = float(vgrid.half_width)
    kept, clipped = _kernels.count_triples(nodes, gamma, box, sph.half_nodes)
    total = int(kept.sum() + clipped.sum())
    clipped_fraction = float(clipped.sum()) / total if total else 0.0

    stencils = None
    if int(kept.sum()) * STENCIL_BYTES <= stencil_memory_limit:
        ptr = np.zeros(n + 1, np.int64)
        ptr[1:] = np.cumsum(kept)
        wt, ia, ib, fr = _kernels.build_stencils(nodes, wmu, gamma, lo, h, vgrid.points_per_axis, box,
                                                 sph.half_nodes, ang, qb, ptr, gamma_order)
        stencils = StencilSet(ptr, wt, ia, ib, fr)

    gain = _kernels.gain_matrix(nodes, wmu, gamma, lo, h, vgrid.points_per_axis, box,
                                sph.half_nodes, ang, qb, interpolation_order, sq / wa)
    k2 = wa[:, None] * gain / wa[None, :]
    k1 = sq[:, None] * loss
    k_raw = k2 - k1
    l_raw = np.diag(nu) - k_raw
    l_sym = 0.5 * (l_raw + l_raw.T)
    proj = invariant_projector(vgrid)
    perp = np.eye(n) - proj
    l_mat = perp @ l_sym @ perp
    l_mat = 0.5 * (l_mat + l_mat.T)
    k_mat = np.diag(nu) - l_mat
    return CollisionTables(vgrid=vgrid, sphere=sph, kernel=kp, nu=nu, loss_matrix=loss,
                           k_matrix=k_mat, l_matrix=l_mat, k_raw=k_raw, projector=proj,
                           angular_total=qb, clipped_fraction=clipped_fraction,
                           interpolation_order=interpolation_order,
                           weight_exponent=weight_exponent, gamma_order=gamma_order,
                           stencils=stencils)


def apply_L(tables: CollisionTables, f: np.ndarray) -> np.ndarray:
    return tables.apply_L(np.asarray(f))


def gamma_bilinear(tables: CollisionTables, f: np.ndarray, g: np.ndarray,
                   conservative: bool = True) -> np.ndarray:
    return tables.gamma(f, g, rtol=0.0, conservative=conservative)


FIELD_OPS = ("L", "K", "nu_mult", "gamma")


def apply_field(tables: CollisionTables, op_id: str, F: SpectralField, G: SpectralField | None = None,
                rtol: float = 1e-12, conservative: bool = True) -> SpectralField:
    """Lift a velocity operator to a spectral snapshot of shape (*x, N)."""
    if op_id not in FIELD_OPS:
        raise ValueError(f"unknown operator {op_id!r}; expected one of {FIELD_OPS}")
    n = tables.size
    if F.values.shape[-1] != n or F.values.ndim != F.grid.spatial_dim + 1:
        raise ValueError(f"snapshot shape {F.values.shape} does not match the velocity grid ({n} nodes)")
    if op_id == "L":
        return F.with_values(tables.apply_L(F.values))
    if op_id == "K":
        return F.with_values(tables.apply_K(F.values))
    if op_id == "nu_mult":
        return F.with_values(tables.apply_nu(F.values))
    G = F if G is None else G
    if G.grid != F.grid or G.values.shape != F.values.shape:
        raise ValueError("gamma operands must share spatial and velocity grids")
    return F.with_values(gamma_field(tables, F.grid, F.values, G.values, rtol=rtol,
                                     conservative=conservative))


def gamma_field(tables: CollisionTables, grid, fhat: np.ndarray, ghat: np.ndarray,
                rtol: float = 1e-12, conservative: bool = True, parts: bool = False):
    """Gamma(f, g) on spectral coefficients (*x, N): pointwise on the 3/2-padded grid."""
    n = tables.size
    fx = grid.to_padded_physical(fhat)
    gx = fx if ghat is fhat else grid.to_padded_physical(ghat)
    pshape = fx.shape
    res = tables.gamma_rows(fx.reshape(-1, n), gx.reshape(-1, n), rtol=rtol,
                            conservative=conservative, parts=parts)
    if parts:
        return tuple(grid.from_padded_physical(r.reshape(pshape)) for r in res)
    return grid.from_padded_physical(res.reshape(pshape))
