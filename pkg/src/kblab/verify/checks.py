"""LHS/RHS evaluators for every registered estimate.

Each evaluator receives (spec, level, trial, s) and returns a list of rows
(label, lhs, rhs).  Trajectory norms reduce dyadic block tables
B[q, t, xi] = ||Delta_q f(t, ., xi)||_{L^2_x}.
"""
from __future__ import annotations

import math

import numpy as np

from ..lp import FourierGrid
from ..macro import gradient3, project_values
from ..norms import (BesovSpec, CLSpec, block_norms, block_weights, c1_sequence, chemin_lerner_from_blocks,
                     classical_from_blocks, energy_functionals, series_convolution, trapezoid_weights,
                     weighted_lp)
from .sampling import Level, TrialSpec, sample_field, sample_scalar, solver_trial, trial_amplitude

GAMMA_RTOL = 1e-12


# helpers -------------------------------------------------------------------
class TrajectoryNorms:
    """Mixed norms of one (n_t, *x, N) array with cached block tables."""

    def __init__(self, values: np.ndarray, times: np.ndarray, level: Level, nu: np.ndarray, vgrid):
        self.values, self.times, self.level = values, np.asarray(times, dtype=float), level
        self.w = vgrid.weights
        self.w_nu = vgrid.weights * nu
        self._blocks: dict = {}
        self._phys = None

    def blocks(self, homogeneous: bool = False):
        if homogeneous not in self._blocks:
            self._blocks[homogeneous] = block_norms(self.values, self.level.grid, 2.0, lead=1,
                                                    sys=self.level.sys, homogeneous=homogeneous)
        return self._blocks[homogeneous]

    def cl(self, rho1: float, s: float, nu: bool = False, homogeneous: bool = False) -> float:
        """||f||_{L~^rho1_T L~^2_{xi(,nu)}(B^s_{2,1})} (homogeneous blocks on request)."""
        idx, B = self.blocks(homogeneous)
        spec = CLSpec(rho1, 2.0, BesovSpec(s, 2.0, 1.0, homogeneous))
        return chemin_lerner_from_blocks(idx, B, self.times, self.w_nu if nu else self.w, spec)

    def sup_x(self, rho1: float, nu: bool = False) -> float:
        """||f||_{L^rho1_T L^2_{xi(,nu)} L^inf_x} with the sup over grid points."""
        if self._phys is None:
            grid = self.level.grid
            phys = np.abs(grid.inverse(self.values, lead=1, real=False))
            self._phys = phys.reshape(phys.shape[0], -1, phys.shape[-1]).max(axis=1)  # (n_t, N)
        v = weighted_lp(self._phys, self.w_nu if nu else self.w, 2.0)
        if math.isinf(rho1):
            return float(v.max())
        return float(weighted_lp(v, trapezoid_weights(self.times), rho1))


def gamma_trajectory(tables, grid: FourierGrid, F: np.ndarray, G: np.ndarray) -> np.ndarray:
    """Raw Gamma(f, g) on spectral trajectories (n_t, *x, N), pointwise on the padded grid."""
    n = tables.size
    fx = grid.to_padded_physical(F, lead=1)
    gx = fx if G is F else grid.to_padded_physical(G, lead=1)
    out = tables.gamma_rows(fx.reshape(-1, n), gx.reshape(-1, n), rtol=GAMMA_RTOL, conservative=False)
    return grid.from_padded_physical(out.reshape(fx.shape), lead=1)


def trilinear_lhs(gam: np.ndarray, h: np.ndarray, times, level: Level, vgrid, s: float) -> float:
    """sum_q 2^{qs} [int_0^T |(Delta_q gam, Delta_q h)_{x, xi}| dt]^{1/2}."""
    grid = level.grid
    idx, mults = level.sys.multipliers(False)
    n_t = gam.shape[0]
    pw = ((gam * np.conj(h)).real @ vgrid.weights).reshape(n_t, -1)  # (n_t, K)
    inner = grid.volume * (mults.reshape(len(idx), -1) ** 2) @ pw.T  # (Q, n_t)
    per_q = np.sqrt(np.abs(inner) @ trapezoid_weights(times))
    return float(np.sum(block_weights(idx, s) * per_q))


def moment_lhs(values: np.ndarray, zeta: np.ndarray, times, level: Level, vgrid, s: float) -> float:
    """sum_q 2^{qs} [int_0^T ||Delta_q (values, zeta)_xi||^2_{L^2_x} dt]^{1/2}."""
    m = values @ (zeta * vgrid.weights)
    idx, B = block_norms(m, level.grid, 2.0, lead=1, sys=level.sys)
    per_q = np.sqrt(B ** 2 @ trapezoid_weights(times))
    return float(np.sum(block_weights(idx, s) * per_q))


def moment_functions(vgrid) -> list[tuple[str, np.ndarray]]:
    """(xi_i xi_m - delta_im) sqrt(mu) for i <= m and (|xi|^2 - 5) xi_i sqrt(mu) / 10."""
    v, sq = vgrid.nodes, vgrid.sqrt_mu
    out = []
    for i in range(3):
        for m in range(i, 3):
            out.append((f"theta_{i + 1}{m + 1}", (v[:, i] * v[:, m] - float(i == m)) * sq))
    for i in range(3):
        out.append((f"lambda_{i + 1}", (vgrid.speed_sq - 5.0) * v[:, i] * sq / 10.0))
    return out


def _traj(spec, level, trial, role, field_class=None):
    tr = sample_field(spec, level.grid, level.tables.vgrid, trial, role, n_times=max(spec.n_times, 2),
                      field_class=field_class)
    return tr.values, tr.times


def _norms(values, times, level):
    tb = level.tables
    return TrajectoryNorms(values, times, level, tb.nu, tb.vgrid)


def _x_terms(Nf, Ng, s, X_hom: bool):
    """Four-term bracket with the L^inf_x slots measured in X = B^{3/2} or its homogeneous version."""
    r = math.sqrt
    return (r(Ng.cl(2, s, True)) * r(Nf.cl(math.inf, 1.5, homogeneous=X_hom))
            + r(Nf.cl(2, 1.5, True, X_hom)) * r(Ng.cl(math.inf, s))
            + r(Nf.cl(2, s, True)) * r(Ng.cl(math.inf, 1.5, homogeneous=X_hom))
            + r(Ng.cl(2, 1.5, True, X_hom)) * r(Nf.cl(math.inf, s)))


# nonlinear estimates -----------------------------------------------------------
def trilinear(spec: TrialSpec, level: Level, trial: int, s: float):
    f, times = _traj(spec, level, trial, 0)
    g, _ = _traj(spec, level, trial, 1)
    h, _ = _traj(spec, level, trial, 2)
    vg = level.tables.vgrid
    lhs = trilinear_lhs(gamma_trajectory(level.tables, level.grid, f, g), h, times, level, vg, s)
    Nf, Ng, Nh = _norms(f, times, level), _norms(g, times, level), _norms(h, times, level)
    r = math.sqrt
    bracket = (r(Ng.cl(2, s, True)) * r(Nf.sup_x(math.inf)) + r(Nf.sup_x(2, True)) * r(Ng.cl(math.inf, s))
               + r(Nf.cl(2, s, True)) * r(Ng.sup_x(math.inf)) + r(Ng.sup_x(2, True)) * r(Nf.cl(math.inf, s)))
    return [("", lhs, r(Nh.cl(2, s, True)) * bracket)]


def trilinear_x(spec: TrialSpec, level: Level, trial: int, s: float):
    f, times = _traj(spec, level, trial, 0)
    g, _ = _traj(spec, level, trial, 1)
    h, _ = _traj(spec, level, trial, 2)
    vg = level.tables.vgrid
    lhs = trilinear_lhs(gamma_trajectory(level.tables, level.grid, f, g), h, times, level, vg, s)
    Nf, Ng, Nh = _norms(f, times, level), _norms(g, times, level), _norms(h, times, level)
    hh = math.sqrt(Nh.cl(2, s, True))
    return [("X=B", lhs, hh * _x_terms(Nf, Ng, s, False)),
            ("X=hom", lhs, hh * _x_terms(Nf, Ng, s, True))]


def trilinear_p(spec: TrialSpec, level: Level, trial: int, s: float):
    f, times = _traj(spec, level, trial, 0)
    g, _ = _traj(spec, level, trial, 1)
    h, _ = _traj(spec, level, trial, 2)
    tb, grid, vg = level.tables, level.grid, level.tables.vgrid
    pf = project_values(f, vg)[1]
    pg = project_values(g, vg)[1]
    Nf, Ng, Nh = _norms(f, times, level), _norms(g, times, level), _norms(h, times, level)
    Npf, Npg = _norms(pf, times, level), _norms(pg, times, level)
    hh = math.sqrt(Nh.cl(2, s, True))
    r = math.sqrt
    lhs1 = trilinear_lhs(gamma_trajectory(tb, grid, pf, g), h, times, level, vg, s)
    lhs2 = trilinear_lhs(gamma_trajectory(tb, grid, f, pg), h, times, level, vg, s)
    lhs3 = trilinear_lhs(gamma_trajectory(tb, grid, pf, pg), h, times, level, vg, s)
    rows = []
    for name, hom in (("X=B", False), ("X=hom", True)):
        rhs1 = hh * (r(Ng.cl(2, s, True)) * r(Npf.cl(math.inf, 1.5, homogeneous=hom))
                     + r(Ng.cl(2, 1.5, True, hom)) * r(Npf.cl(math.inf, s)))
        rhs2 = hh * (r(Nf.cl(2, s, True)) * r(Npg.cl(math.inf, 1.5, homogeneous=hom))
                     + r(Nf.cl(2, 1.5, True, hom)) * r(Npg.cl(math.inf, s)))
        rhs3 = hh * (r(Npg.cl(math.inf, s)) * r(Npf.cl(2, 1.5, homogeneous=hom))
                     + r(Npg.cl(math.inf, 1.5, homogeneous=hom)) * r(Npf.cl(2, s)))
        rows += [(f"Pf,g;{name}", lhs1, rhs1), (f"f,Pg;{name}", lhs2, rhs2), (f"Pf,Pg;{name}", lhs3, rhs3)]
    return rows


def nonlinear_energy(spec: TrialSpec, level: Level, trial: int, s: float):
    f, times = _traj(spec, level, trial, 0)
    tb, grid, vg = level.tables, level.grid, level.tables.vgrid
    _, pf, mf = project_values(f, vg)
    pieces = {"PP": (pf, pf), "PM": (pf, mf), "MP": (mf, pf), "MM": (mf, mf)}
    gam = {k: gamma_trajectory(tb, grid, a, b) for k, (a, b) in pieces.items()}
    Np, Nm = _norms(pf, times, level), _norms(mf, times, level)
    rec = energy_functionals(_as_traj(f, times, level), tb.nu, level.sys)
    r = math.sqrt
    bound = {
        "PP": r(Np.cl(2, s, homogeneous=True)) * r(Np.cl(math.inf, s)) * r(Nm.cl(2, s, True)),
        "PM": Nm.cl(2, s, True) * r(Np.cl(math.inf, s)),
        "MP": Nm.cl(2, s, True) * r(Np.cl(math.inf, s)),
        "MM": r(Nm.cl(math.inf, s)) * Nm.cl(2, s, True),
    }
    rows = [(k, trilinear_lhs(gam[k], mf, times, level, vg, s), bound[k]) for k in pieces]
    total = sum(gam.values())
    rows.append(("total", trilinear_lhs(total, mf, times, level, vg, s), r(rec.E_T) * rec.D_T))
    return rows


def moment_bound(spec: TrialSpec, level: Level, trial: int, s: float):
    f, times = _traj(spec, level, trial, 0)
    tb, vg = level.tables, level.tables.vgrid
    gam = gamma_trajectory(tb, level.grid, f, f)
    rec = energy_functionals(_as_traj(f, times, level), tb.nu, level.sys)
    rhs = rec.E_T * rec.D_T
    return [(name, moment_lhs(gam, z, times, level, vg, s), rhs) for name, z in moment_functions(vg)]


def l_upper(spec: TrialSpec, level: Level, trial: int, s: float):
    f, times = _traj(spec, level, trial, 0)
    tb, vg = level.tables, level.tables.vgrid
    mf = project_values(f, vg)[2]
    lm = tb.apply_L(mf)
    rhs = _norms(mf, times, level).cl(2, s, True)
    return [(name, moment_lhs(lm, z, times, level, vg, s), rhs) for name, z in moment_functions(vg)]


def _as_traj(values, times, level):
    from ..norms import DistributionTrajectory
    return DistributionTrajectory(times, values, level.grid, level.tables.vgrid)


# solver-trajectory estimates ---------------------------------------------------
_SOLVER_CACHE: dict = {}


def _solver_record(spec: TrialSpec, level: Level, trial: int):
    """(||f0||, E_T, D_T, ||grad(a,b,c)||_{L~^2_T B^{1/2}}, ||{I-P}f||_{L~^2_T L~^2_nu B^{3/2}})."""
    key = (spec, level, trial)
    if key not in _SOLVER_CACHE:
        if len(_SOLVER_CACHE) > 512:
            _SOLVER_CACHE.clear()
        _, _, diag = solver_trial(spec, level, trial)
        times = diag.times
        idx = diag.blocks["indices"]
        tw = trapezoid_weights(times)
        grad = float(np.sum(block_weights(idx, 0.5) * np.sqrt(diag.blocks["grad"] ** 2 @ tw)))
        micro = float(np.sum(block_weights(idx, 1.5) * np.sqrt(diag.blocks["micro"] ** 2 @ tw)))
        _SOLVER_CACHE[key] = (diag.initial_norm, float(diag["E"][-1]), float(diag["D"][-1]), grad, micro)
    return _SOLVER_CACHE[key]


def macro_dissipation(spec: TrialSpec, level: Level, trial: int, s: float):
    n0, E, D, grad, micro = _solver_record(spec, level, trial)
    return [("", grad, n0 + E + micro + E * D)]


def a_priori(spec: TrialSpec, level: Level, trial: int, s: float):
    n0, E, D, _, _ = _solver_record(spec, level, trial)
    return [(f"amp={trial_amplitude(spec, trial):.1e}", E + D, n0 + (math.sqrt(E) + E) * D)]


# linear velocity operators -----------------------------------------------------
def _linear_field(spec, level, trial, role, field_class):
    tb = level.linear_tables
    return sample_field(spec, level.grid, tb.vgrid, trial, role, field_class=field_class,
                        degree=max(spec.velocity_degree, 4))


def _per_block_inner(level: Level, u: np.ndarray, v: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """(Delta_q u, Delta_q v)_{x, xi} for every block q of snapshots (*x, N)."""
    grid = level.grid
    idx, mults = level.sys.multipliers(False)
    pw = ((u * np.conj(v)).real @ weights).reshape(-1)
    return grid.volume * (mults.reshape(len(idx), -1) ** 2) @ pw


def coercivity(spec: TrialSpec, level: Level, trial: int, s: float):
    tb = level.linear_tables
    f = _linear_field(spec, level, trial, 0, "microscopic-only")
    w = tb.vgrid.weights
    lf = _per_block_inner(level, tb.apply_L(f), f, w)
    nf = _per_block_inner(level, f, f, w * tb.nu)
    live = nf > 1e-30 * max(float(nf.max()), 1e-300)
    if not np.any(live):
        return [("", 0.0, 0.0)]
    ratio = np.where(live, lf / np.where(live, nf, 1.0), np.inf)
    q = int(np.argmin(ratio))
    return [(f"q={int(level.sys.multipliers(False)[0][q])}", float(lf[q]), float(nf[q]))]


def k_bound(spec: TrialSpec, level: Level, trial: int, s: float):
    tb = level.linear_tables
    f = _linear_field(spec, level, trial, 0, "general")
    g = _linear_field(spec, level, trial, 1, "general")
    w = tb.vgrid.weights
    kfg = np.abs(_per_block_inner(level, tb.apply_K(f), g, w))
    nn = np.sqrt(_per_block_inner(level, f, f, w) * _per_block_inner(level, g, g, w))
    live = nn > 1e-30 * max(float(nn.max()), 1e-300)
    if not np.any(live):
        return [("", 0.0, 0.0)]
    ratio = np.where(live, kfg / np.where(live, nn, 1.0), -np.inf)
    q = int(np.argmax(ratio))
    return [(f"q={int(level.sys.multipliers(False)[0][q])}", float(kfg[q]), float(nn[q]))]


# harmonic-analysis estimates -------------------------------------------------
def _lp_physical(grid: FourierGrid, coeffs: np.ndarray, p: float) -> float:
    phys = np.abs(grid.inverse(coeffs, real=False)).ravel()
    if math.isinf(p):
        return float(phys.max())
    return float((grid.cell_volume * np.sum(phys ** p)) ** (1.0 / p))


def block_bound(spec: TrialSpec, level: Level, trial: int, s: float):
    grid, sys = level.grid, level.sys
    f = sample_scalar(spec, grid, trial, 0)
    rows = []
    for p in (1.0, 2.0, math.inf):
        nf = _lp_physical(grid, f, p)
        blocks = [_lp_physical(grid, f * sys.block_multiplier(q), p) for q in sys.block_indices]
        lows = [_lp_physical(grid, f * sys.lowpass_multiplier(q), p) for q in range(-1, sys.q_max + 2)]
        rows.append((f"Delta;p={p:g}", max(blocks), nf))
        rows.append((f"S;p={p:g}", max(lows), nf))
    return rows


def _scalar_cl(level: Level, values: np.ndarray, times, rho: float, s: float, homogeneous: bool) -> float:
    idx, B = block_norms(values, level.grid, 2.0, lead=1, sys=level.sys, homogeneous=homogeneous)
    if B.ndim > 2:  # component axis
        B = np.sqrt(np.sum(B.reshape(B.shape[0], B.shape[1], -1) ** 2, axis=-1))
    t = weighted_lp(B, None if math.isinf(rho) else trapezoid_weights(times), rho)
    return float(np.sum(block_weights(idx, s) * t))


def bernstein(spec: TrialSpec, level: Level, trial: int, s: float):
    times = np.linspace(0.0, spec.horizon, max(spec.n_times, 2))
    f = sample_scalar(spec, level.grid, trial, 1, n_times=times.size)
    grad = gradient3(level.grid, f, lead=1)[..., : level.grid.spatial_dim]
    rows = []
    for rho in (2.0, math.inf):
        a = _scalar_cl(level, grad, times, rho, s, True)
        b = _scalar_cl(level, f, times, rho, s + 1.0, True)
        rows += [(f"grad<=f;rho={rho:g}", a, b), (f"f<=grad;rho={rho:g}", b, a)]
    return rows


def nh_embed(spec: TrialSpec, level: Level, trial: int, s: float):
    times = np.linspace(0.0, spec.horizon, max(spec.n_times, 2))
    f = sample_scalar(spec, level.grid, trial, 2, n_times=times.size)
    return [(f"rho={rho:g}", _scalar_cl(level, f, times, rho, s, True), _scalar_cl(level, f, times, rho, s, False))
            for rho in (2.0, math.inf)]


# exact-constant checks -----------------------------------------------------------
def cl_order(spec: TrialSpec, level: Level, trial: int, s: float):
    f, times = _traj(spec, level, trial, 0)
    vg = level.tables.vgrid
    idx, B = block_norms(f, level.grid, 2.0, lead=1, sys=level.sys)
    rows = []
    for rho1 in (2.0, math.inf):
        for r in (1.0, math.inf):
            cs = CLSpec(rho1, 2.0, BesovSpec(s, 2.0, r))
            cl = chemin_lerner_from_blocks(idx, B, times, vg.weights, cs)
            cls = classical_from_blocks(idx, B, times, vg.weights, cs)
            label = f"r={r:g};rho1={rho1:g};rho2=2"
            rows.append((label, cls, cl) if r == 1.0 else (label, cl, cls))
    return rows


def series_conv(spec: TrialSpec, level: Level, trial: int, s: float):
    g, times = _traj(spec, level, trial, 1)
    tb = level.tables
    vg = tb.vgrid
    Ng = _norms(g, times, level)
    denom = Ng.cl(2, s, True)
    if denom == 0.0:
        return [("", 0.0, 0.0)]
    idx, B = Ng.blocks(False)
    speed = np.sqrt(vg.speed_sq) ** tb.kernel.gamma if tb.kernel.gamma > 0 else np.ones(vg.size)
    c = c1_sequence(B, idx, times, vg.weights * speed, s, denom)
    lhs, bound = series_convolution(c, idx, s)
    return [("", lhs, bound)]
