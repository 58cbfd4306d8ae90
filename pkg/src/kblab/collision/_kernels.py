"""Compiled collision quadrature kernels.

Every (xi_p, xi_s, omega_i) triple is generated with the sphere lattice
rotated so its pole points along xi_p - xi_s.  The lattice heights then give
(xi_p - xi_s).omega_i = +-r z_i exactly, so the angular sum is the same for
every pair.  Post-collision values are tensor Lagrange interpolants
(trilinear or tricubic) of f / mu^alpha; the Maxwellian factors are restored
analytically using mu^alpha(xi'_*) mu^alpha(xi') = mu^alpha(xi) mu^alpha(xi_*).
The caller folds w_s mu_s^(1/2 + alpha) into ``wmu``.

Parallel loops run over output rows only and each row accumulates in a fixed
order, so results do not depend on the thread count.
"""
from __future__ import annotations

import numba as nb
import numpy as np


@nb.njit(cache=True, inline="always")
def _frame(dx, dy, dz, r):
    """Rotation taking the pole to +-(d / r), chosen in the upper hemisphere."""
    ex, ey, ez = dx / r, dy / r, dz / r
    if ez < 0.0:
        ex, ey, ez = -ex, -ey, -ez
    k = 1.0 / (1.0 + ez)
    # Rodrigues for the axis z x e
    r00 = 1.0 - ex * ex * k
    r01 = -ex * ey * k
    r11 = 1.0 - ey * ey * k
    return r00, r01, ex, r01, r11, ey, -ex, -ey, ez


@nb.njit(cache=True, inline="always")
def _locate(q, lo, h, n, order):
    """First stencil node and local coordinate for Lagrange interpolation."""
    u = (q - lo) / h
    i = int(np.floor(u)) - (order - 1) // 2
    if i < 0:
        i = 0
    if i > n - 1 - order:
        i = n - 1 - order
    return i, u - i


@nb.njit(cache=True, inline="always")
def _axis_weights(t, order, w):
    if order == 1:
        w[0] = 1.0 - t
        w[1] = t
    else:
        t1 = t - 1.0
        t2 = t - 2.0
        t3 = t - 3.0
        w[0] = -t1 * t2 * t3 / 6.0
        w[1] = t * t2 * t3 / 2.0
        w[2] = -t * t1 * t3 / 2.0
        w[3] = t * t1 * t2 / 6.0


@nb.njit(cache=True)
def _pair_count(p, nodes, gamma, box, sph):
    """Number of kept and clipped triples for output row p."""
    n_nodes = nodes.shape[0]
    m = sph.shape[0]
    kept = 0
    clipped = 0
    px, py, pz = nodes[p, 0], nodes[p, 1], nodes[p, 2]
    for s in range(n_nodes):
        dx = px - nodes[s, 0]
        dy = py - nodes[s, 1]
        dz = pz - nodes[s, 2]
        r = np.sqrt(dx * dx + dy * dy + dz * dz)
        if r == 0.0:
            if gamma == 0.0:
                kept += 1
            continue
        r00, r01, r02, r10, r11, r12, r20, r21, r22 = _frame(dx, dy, dz, r)
        for i in range(m):
            ox = r00 * sph[i, 0] + r01 * sph[i, 1] + r02 * sph[i, 2]
            oy = r10 * sph[i, 0] + r11 * sph[i, 1] + r12 * sph[i, 2]
            oz = r20 * sph[i, 0] + r21 * sph[i, 1] + r22 * sph[i, 2]
            c = dx * ox + dy * oy + dz * oz
            a0 = nodes[s, 0] + c * ox
            a1 = nodes[s, 1] + c * oy
            a2 = nodes[s, 2] + c * oz
            b0 = px - c * ox
            b1 = py - c * oy
            b2 = pz - c * oz
            if (a0 < -box or a0 > box or a1 < -box or a1 > box or a2 < -box or a2 > box
                    or b0 < -box or b0 > box or b1 < -box or b1 > box or b2 < -box or b2 > box):
                clipped += 1
            else:
                kept += 1
    return kept, clipped


@nb.njit(cache=True, parallel=True)
def count_triples(nodes, gamma, box, sph):
    n_nodes = nodes.shape[0]
    kept = np.zeros(n_nodes, np.int64)
    clipped = np.zeros(n_nodes, np.int64)
    for p in nb.prange(n_nodes):
        kept[p], clipped[p] = _pair_count(p, nodes, gamma, box, sph)
    return kept, clipped


@nb.njit(cache=True, parallel=True)
def build_stencils(nodes, wmu, gamma, lo, h, n, box, sph, ang, qb, ptr, order):
    """Fill CSR stencils: weight, base corners for xi'_* and xi', fractions."""
    total = ptr[-1]
    wt = np.empty(total)
    ia = np.empty(total, np.int32)
    ib = np.empty(total, np.int32)
    fr = np.empty((total, 6))
    n_nodes = nodes.shape[0]
    m = sph.shape[0]
    for p in nb.prange(n_nodes):
        k = ptr[p]
        px, py, pz = nodes[p, 0], nodes[p, 1], nodes[p, 2]
        for s in range(n_nodes):
            dx = px - nodes[s, 0]
            dy = py - nodes[s, 1]
            dz = pz - nodes[s, 2]
            r = np.sqrt(dx * dx + dy * dy + dz * dz)
            if r == 0.0:
                if gamma == 0.0:
                    i0, f0 = _locate(px, lo, h, n, order)
                    i1, f1 = _locate(py, lo, h, n, order)
                    i2, f2 = _locate(pz, lo, h, n, order)
                    base = (i0 * n + i1) * n + i2
                    ia[k] = base
                    ib[k] = base
                    fr[k, 0] = f0
                    fr[k, 1] = f1
                    fr[k, 2] = f2
                    fr[k, 3] = f0
                    fr[k, 4] = f1
                    fr[k, 5] = f2
                    wt[k] = wmu[s] * qb
                    k += 1
                continue
            rg = r ** gamma
            r00, r01, r02, r10, r11, r12, r20, r21, r22 = _frame(dx, dy, dz, r)
            for i in range(m):
                ox = r00 * sph[i, 0] + r01 * sph[i, 1] + r02 * sph[i, 2]
                oy = r10 * sph[i, 0] + r11 * sph[i, 1] + r12 * sph[i, 2]
                oz = r20 * sph[i, 0] + r21 * sph[i, 1] + r22 * sph[i, 2]
                c = dx * ox + dy * oy + dz * oz
                a0 = nodes[s, 0] + c * ox
                a1 = nodes[s, 1] + c * oy
                a2 = nodes[s, 2] + c * oz
                b0 = px - c * ox
                b1 = py - c * oy
                b2 = pz - c * oz
                if (a0 < -box or a0 > box or a1 < -box or a1 > box or a2 < -box or a2 > box
                        or b0 < -box or b0 > box or b1 < -box or b1 > box or b2 < -box or b2 > box):
                    continue
                j0, g0 = _locate(a0, lo, h, n, order)
                j1, g1 = _locate(a1, lo, h, n, order)
                j2, g2 = _locate(a2, lo, h, n, order)
                l0, e0 = _locate(b0, lo, h, n, order)
                l1, e1 = _locate(b1, lo, h, n, order)
                l2, e2 = _locate(b2, lo, h, n, order)
                ia[k] = (j0 * n + j1) * n + j2
                ib[k] = (l0 * n + l1) * n + l2
                fr[k, 0] = g0
                fr[k, 1] = g1
                fr[k, 2] = g2
                fr[k, 3] = e0
                fr[k, 4] = e1
                fr[k, 5] = e2
                wt[k] = wmu[s] * rg * ang[i]
                k += 1
    return wt, ia, ib, fr


@nb.njit(cache=True, inline="always")
def _interp(vals, base, f0, f1, f2, n, order, wk, out):
    """Tensor Lagrange interpolation of every column of vals at one point."""
    nc = vals.shape[1]
    s1 = n
    s2 = n * n
    if order == 1:
        g0 = 1.0 - f0
        g1 = 1.0 - f1
        g2 = 1.0 - f2
        w00 = g0 * g1
        w01 = g0 * f1
        w10 = f0 * g1
        w11 = f0 * f1
        o000 = base
        o010 = base + s1
        o100 = base + s2
        o110 = base + s2 + s1
        for j in range(nc):
            out[j] = (w00 * (g2 * vals[o000, j] + f2 * vals[o000 + 1, j])
                      + w01 * (g2 * vals[o010, j] + f2 * vals[o010 + 1, j])
                      + w10 * (g2 * vals[o100, j] + f2 * vals[o100 + 1, j])
                      + w11 * (g2 * vals[o110, j] + f2 * vals[o110 + 1, j]))
        return
    for j in range(nc):
        out[j] = 0.0
    _axis_weights(f0, order, wk[0])
    _axis_weights(f1, order, wk[1])
    _axis_weights(f2, order, wk[2])
    for cx in range(order + 1):
        wx = wk[0, cx]
        for cy in range(order + 1):
            wxy = wx * wk[1, cy]
            o = base + cx * s2 + cy * s1
            for cz in range(order + 1):
                w = wxy * wk[2, cz]
                for j in range(nc):
                    out[j] += w * vals[o + cz, j]


@nb.njit(cache=True, inline="always")
def _accumulate(acc, w, fa, gb):
    na = fa.shape[0]
    nbc = gb.shape[0]
    for i in range(na):
        t = w * fa[i]
        for j in range(nbc):
            acc[i, j] += t * gb[j]


@nb.njit(cache=True, parallel=True)
def gain_stored(A, B, ptr, wt, ia, ib, fr, n, order):
    """out[p, i, j] = sum_t W_t A_i(xi'_*) B_j(xi') with stored stencils.

    Each row gathers its interpolants into (T_p, ncols) buffers and reduces
    them with one matrix product, in a fixed order per row.
    """
    n_nodes = ptr.shape[0] - 1
    na = A.shape[1]
    nbc = B.shape[1]
    out = np.zeros((n_nodes, na, nbc))
    for p in nb.prange(n_nodes):
        k0 = ptr[p]
        m = ptr[p + 1] - k0
        fa = np.empty((m, na))
        gb = np.empty((m, nbc))
        wk = np.empty((3, 4))
        for kk in range(m):
            k = k0 + kk
            _interp(A, ia[k], fr[k, 0], fr[k, 1], fr[k, 2], n, order, wk, fa[kk])
            _interp(B, ib[k], fr[k, 3], fr[k, 4], fr[k, 5], n, order, wk, gb[kk])
            w = wt[k]
            for i in range(na):
                fa[kk, i] *= w
        if m > 0:
            out[p] = np.dot(fa.T, gb)
    return out


@nb.njit(cache=True, parallel=True)
def gain_direct(A, B, nodes, wmu, gamma, lo, h, n, box, sph, ang, qb, order):
    """Same as gain_stored but regenerating every triple on the fly."""
    n_nodes = nodes.shape[0]
    na = A.shape[1]
    nbc = B.shape[1]
    m = sph.shape[0]
    out = np.zeros((n_nodes, na, nbc))
    for p in nb.prange(n_nodes):
        fa = np.empty(na)
        gb = np.empty(nbc)
        wk = np.empty((3, 4))
        acc = np.zeros((na, nbc))
        px, py, pz = nodes[p, 0], nodes[p, 1], nodes[p, 2]
        for s in range(n_nodes):
            dx = px - nodes[s, 0]
            dy = py - nodes[s, 1]
            dz = pz - nodes[s, 2]
            r = np.sqrt(dx * dx + dy * dy + dz * dz)
            if r == 0.0:
                if gamma == 0.0:
                    i0, f0 = _locate(px, lo, h, n, order)
                    i1, f1 = _locate(py, lo, h, n, order)
                    i2, f2 = _locate(pz, lo, h, n, order)
                    base = (i0 * n + i1) * n + i2
                    _interp(A, base, f0, f1, f2, n, order, wk, fa)
                    _interp(B, base, f0, f1, f2, n, order, wk, gb)
                    _accumulate(acc, wmu[s] * qb, fa, gb)
                continue
            rg = r ** gamma
            r00, r01, r02, r10, r11, r12, r20, r21, r22 = _frame(dx, dy, dz, r)
            for i in range(m):
                ox = r00 * sph[i, 0] + r01 * sph[i, 1] + r02 * sph[i, 2]
                oy = r10 * sph[i, 0] + r11 * sph[i, 1] + r12 * sph[i, 2]
                oz = r20 * sph[i, 0] + r21 * sph[i, 1] + r22 * sph[i, 2]
                c = dx * ox + dy * oy + dz * oz
                a0 = nodes[s, 0] + c * ox
                a1 = nodes[s, 1] + c * oy
                a2 = nodes[s, 2] + c * oz
                b0 = px - c * ox
                b1 = py - c * oy
                b2 = pz - c * oz
                if (a0 < -box or a0 > box or a1 < -box or a1 > box or a2 < -box or a2 > box
                        or b0 < -box or b0 > box or b1 < -box or b1 > box or b2 < -box or b2 > box):
                    continue
                j0, g0 = _locate(a0, lo, h, n, order)
                j1, g1 = _locate(a1, lo, h, n, order)
                j2, g2 = _locate(a2, lo, h, n, order)
                l0, e0 = _locate(b0, lo, h, n, order)
                l1, e1 = _locate(b1, lo, h, n, order)
                l2, e2 = _locate(b2, lo, h, n, order)
                _interp(A, (j0 * n + j1) * n + j2, g0, g1, g2, n, order, wk, fa)
                _interp(B, (l0 * n + l1) * n + l2, e0, e1, e2, n, order, wk, gb)
                _accumulate(acc, wmu[s] * rg * ang[i], fa, gb)
        out[p] = acc
    return out


@nb.njit(cache=True, inline="always")
def _interp1(vals, base, f0, f1, f2, n, order, wk):
    _axis_weights(f0, order, wk[0])
    _axis_weights(f1, order, wk[1])
    _axis_weights(f2, order, wk[2])
    s1 = n
    s2 = n * n
    acc = 0.0
    for cx in range(order + 1):
        for cy in range(order + 1):
            wxy = wk[0, cx] * wk[1, cy]
            for cz in range(order + 1):
                acc += wxy * wk[2, cz] * vals[base + cx * s2 + cy * s1 + cz]
    return acc


@nb.njit(cache=True, inline="always")
def _scatter(row, w, base, f0, f1, f2, n, order, wk):
    _axis_weights(f0, order, wk[0])
    _axis_weights(f1, order, wk[1])
    _axis_weights(f2, order, wk[2])
    s1 = n
    s2 = n * n
    for cx in range(order + 1):
        wx = wk[0, cx]
        for cy in range(order + 1):
            wxy = wx * wk[1, cy]
            for cz in range(order + 1):
                c = wxy * wk[2, cz]
                if c != 0.0:
                    row[base + cx * s2 + cy * s1 + cz] += w * c


@nb.njit(cache=True, parallel=True)
def gain_matrix(nodes, wmu, gamma, lo, h, n, box, sph, ang, qb, order, partner):
    """Dense M[p, m]: the map G -> gain(P, G) + gain(G, P) on normalised data,
    where P is the normalised Maxwellian partner (normalisation applied by caller)."""
    n_nodes = nodes.shape[0]
    m = sph.shape[0]
    out = np.zeros((n_nodes, n_nodes))
    for p in nb.prange(n_nodes):
        row = out[p]
        wk = np.empty((3, 4))
        px, py, pz = nodes[p, 0], nodes[p, 1], nodes[p, 2]
        for s in range(n_nodes):
            dx = px - nodes[s, 0]
            dy = py - nodes[s, 1]
            dz = pz - nodes[s, 2]
            r = np.sqrt(dx * dx + dy * dy + dz * dz)
            if r == 0.0:
                if gamma == 0.0:
                    i0, f0 = _locate(px, lo, h, n, order)
                    i1, f1 = _locate(py, lo, h, n, order)
                    i2, f2 = _locate(pz, lo, h, n, order)
                    base = (i0 * n + i1) * n + i2
                    pv = _interp1(partner, base, f0, f1, f2, n, order, wk)
                    _scatter(row, 2.0 * wmu[s] * qb * pv, base, f0, f1, f2, n, order, wk)
                continue
            rg = r ** gamma
            r00, r01, r02, r10, r11, r12, r20, r21, r22 = _frame(dx, dy, dz, r)
            for i in range(m):
                ox = r00 * sph[i, 0] + r01 * sph[i, 1] + r02 * sph[i, 2]
                oy = r10 * sph[i, 0] + r11 * sph[i, 1] + r12 * sph[i, 2]
                oz = r20 * sph[i, 0] + r21 * sph[i, 1] + r22 * sph[i, 2]
                c = dx * ox + dy * oy + dz * oz
                a0 = nodes[s, 0] + c * ox
                a1 = nodes[s, 1] + c * oy
                a2 = nodes[s, 2] + c * oz
                b0 = px - c * ox
                b1 = py - c * oy
                b2 = pz - c * oz
                if (a0 < -box or a0 > box or a1 < -box or a1 > box or a2 < -box or a2 > box
                        or b0 < -box or b0 > box or b1 < -box or b1 > box or b2 < -box or b2 > box):
                    continue
                w = wmu[s] * rg * ang[i]
                j0, g0 = _locate(a0, lo, h, n, order)
                j1, g1 = _locate(a1, lo, h, n, order)
                j2, g2 = _locate(a2, lo, h, n, order)
                l0, e0 = _locate(b0, lo, h, n, order)
                l1, e1 = _locate(b1, lo, h, n, order)
                l2, e2 = _locate(b2, lo, h, n, order)
                ba = (j0 * n + j1) * n + j2
                bb = (l0 * n + l1) * n + l2
                pa = _interp1(partner, ba, g0, g1, g2, n, order, wk)
                pb = _interp1(partner, bb, e0, e1, e2, n, order, wk)
                _scatter(row, w * pb, ba, g0, g1, g2, n, order, wk)
                _scatter(row, w * pa, bb, e0, e1, e2, n, order, wk)
    return out


@nb.njit(cache=True)
def post_collision_gap(nodes, sph, n_pairs, seed_stride):
    """max | |xi' - xi'_*| - |xi - xi_*| | over a deterministic subsample of pairs."""
    n_nodes = nodes.shape[0]
    m = sph.shape[0]
    worst = 0.0
    for t in range(n_pairs):
        p = (t * seed_stride) % n_nodes
        s = (t * 7919 + 13) % n_nodes
        dx = nodes[p, 0] - nodes[s, 0]
        dy = nodes[p, 1] - nodes[s, 1]
        dz = nodes[p, 2] - nodes[s, 2]
        r = np.sqrt(dx * dx + dy * dy + dz * dz)
        if r == 0.0:
            continue
        r00, r01, r02, r10, r11, r12, r20, r21, r22 = _frame(dx, dy, dz, r)
        for i in range(m):
            ox = r00 * sph[i, 0] + r01 * sph[i, 1] + r02 * sph[i, 2]
            oy = r10 * sph[i, 0] + r11 * sph[i, 1] + r12 * sph[i, 2]
            oz = r20 * sph[i, 0] + r21 * sph[i, 1] + r22 * sph[i, 2]
            c = dx * ox + dy * oy + dz * oz
            ex = dx - 2.0 * c * ox
            ey = dy - 2.0 * c * oy
            ez = dz - 2.0 * c * oz
            gap = abs(np.sqrt(ex * ex + ey * ey + ez * ez) - r)
            if gap > worst:
                worst = gap
    return worst
