"""Compiled node-update kernels for the gradient-flow solver.

All kernels operate on compact per-node arrays (inside nodes only) in the
orthonormalized tensor coordinates c (q = K c), so the Frobenius metric is
the plain Euclidean one. The basis is pre-contracted with K into
cb[p, i, a] so a node tensor is M = sum_p c_p cb[p] directly; boundary
penalty matrices (a_c, hv, mu*nu) are precomputed per boundary node.

The inner loops are written allocation-free (scratch arrays are taken
per-thread from buffers sized by get_num_threads) because the per-node
work is a few hundred flops and heap traffic dominates otherwise.
"""

from __future__ import annotations

import numpy as np
from numba import get_num_threads, get_thread_id, njit, prange


@njit(cache=True)
def _w_value(ci, cb, lam2, mat):
    """W at one node; fills mat with the n x n^2 matrix view."""
    m, n, nsq = cb.shape
    for i in range(n):
        for a in range(nsq):
            acc = 0.0
            for p in range(m):
                acc += ci[p] * cb[p, i, a]
            mat[i, a] = acc
    w = 0.0
    for i in range(n):
        for j in range(n):
            acc = 0.0
            for a in range(nsq):
                acc += mat[i, a] * mat[j, a]
            if i == j:
                acc -= lam2
            w += acc * acc
    return w


@njit(cache=True)
def _w_grad(ci, cb, lam2, mat, g, dd, gw):
    """W and its c-gradient at one node; mat/g/dd are scratch."""
    m, n, nsq = cb.shape
    for i in range(n):
        for a in range(nsq):
            acc = 0.0
            for p in range(m):
                acc += ci[p] * cb[p, i, a]
            mat[i, a] = acc
    w = 0.0
    for i in range(n):
        for j in range(n):
            acc = 0.0
            for a in range(nsq):
                acc += mat[i, a] * mat[j, a]
            if i == j:
                acc -= lam2
            g[i, j] = acc
            w += acc * acc
    for i in range(n):
        for a in range(nsq):
            acc = 0.0
            for j in range(n):
                acc += g[i, j] * mat[j, a]
            dd[i, a] = 4.0 * acc
    for p in range(m):
        acc = 0.0
        for i in range(n):
            for a in range(nsq):
                acc += dd[i, a] * cb[p, i, a]
        gw[p] = acc
    return w


@njit(cache=True)
def _v_grad(ci, a_c, munu, r, gv):
    """V = 0.5 |a_c c - mu nu|^2 and its c-gradient; r is scratch (n,)."""
    n, m = a_c.shape
    v = 0.0
    for i in range(n):
        acc = -munu[i]
        for p in range(m):
            acc += a_c[i, p] * ci[p]
        r[i] = acc
        v += acc * acc
    for p in range(m):
        acc = 0.0
        for i in range(n):
            acc += a_c[i, p] * r[i]
        gv[p] = acc
    return 0.5 * v


@njit(cache=True)
def _solve_inplace(a, b):
    """Solve a x = b (m x m, partial pivoting) in place; x left in b."""
    m = a.shape[0]
    for col in range(m):
        piv = col
        big = abs(a[col, col])
        for r in range(col + 1, m):
            if abs(a[r, col]) > big:
                big = abs(a[r, col])
                piv = r
        if piv != col:
            for cc in range(m):
                tmp = a[col, cc]
                a[col, cc] = a[piv, cc]
                a[piv, cc] = tmp
            tmp = b[col]
            b[col] = b[piv]
            b[piv] = tmp
        inv = 1.0 / a[col, col]
        for r in range(col + 1, m):
            f = a[r, col] * inv
            if f != 0.0:
                for cc in range(col + 1, m):
                    a[r, cc] -= f * a[col, cc]
                b[r] -= f * b[col]
    for col in range(m - 1, -1, -1):
        acc = b[col]
        for cc in range(col + 1, m):
            acc -= a[col, cc] * b[cc]
        b[col] = acc / a[col, col]


@njit(cache=True, parallel=True)
def gradient(c, nbr, binv, a_c, munu, cb, lam2,
             inv_h2, inv_eps2, inv_h, inv_d12, inv_d22, weak, out):
    """Flow-form gradient: dc/dt = -out. out shape (Ni, m)."""
    n_nodes, m = c.shape
    n = cb.shape[1]
    nsq = cb.shape[2]
    two_dim = nbr.shape[1]
    nth = get_num_threads()
    mat_s = np.empty((nth, n, nsq))
    g_s = np.empty((nth, n, n))
    dd_s = np.empty((nth, n, nsq))
    gw_s = np.empty((nth, m))
    gv_s = np.empty((nth, m))
    r_s = np.empty((nth, n))
    lap_s = np.empty((nth, m))
    for i in prange(n_nodes):
        t = get_thread_id()
        gw = gw_s[t]
        _w_grad(c[i], cb, lam2, mat_s[t], g_s[t], dd_s[t], gw)
        lap = lap_s[t]
        deg = 0.0
        for p in range(m):
            lap[p] = 0.0
        for s in range(two_dim):
            j = nbr[i, s]
            if j >= 0:
                deg += 1.0
                for p in range(m):
                    lap[p] += c[j, p]
        for p in range(m):
            out[i, p] = inv_h2 * (deg * c[i, p] - lap[p]) + inv_eps2 * gw[p]
        b = binv[i]
        if weak and b >= 0:
            gv = gv_s[t]
            _v_grad(c[i], a_c[b], munu[b], r_s[t], gv)
            for p in range(m):
                out[i, p] += inv_h * (inv_d12 * gv[p] + inv_d22 * gw[p])


@njit(cache=True, parallel=True)
def step_explicit(c, c_new, nbr, binv, a_c, munu, cb, lam2,
                  inv_h2, inv_eps2, inv_h, inv_d12, inv_d22, dt,
                  strong, weak_explicit):
    """One explicit Euler step into c_new. strong: boundary nodes pinned.
    weak_explicit: include surface penalties explicitly (else bulk only)."""
    n_nodes, m = c.shape
    n = cb.shape[1]
    nsq = cb.shape[2]
    two_dim = nbr.shape[1]
    nth = get_num_threads()
    mat_s = np.empty((nth, n, nsq))
    g_s = np.empty((nth, n, n))
    dd_s = np.empty((nth, n, nsq))
    gw_s = np.empty((nth, m))
    gv_s = np.empty((nth, m))
    r_s = np.empty((nth, n))
    lap_s = np.empty((nth, m))
    for i in prange(n_nodes):
        b = binv[i]
        if strong and b >= 0:
            for p in range(m):
                c_new[i, p] = c[i, p]
            continue
        t = get_thread_id()
        gw = gw_s[t]
        _w_grad(c[i], cb, lam2, mat_s[t], g_s[t], dd_s[t], gw)
        lap = lap_s[t]
        deg = 0.0
        for p in range(m):
            lap[p] = 0.0
        for s in range(two_dim):
            j = nbr[i, s]
            if j >= 0:
                deg += 1.0
                for p in range(m):
                    lap[p] += c[j, p]
        for p in range(m):
            c_new[i, p] = c[i, p] - dt * (
                inv_h2 * (deg * c[i, p] - lap[p]) + inv_eps2 * gw[p])
        if weak_explicit and b >= 0:
            gv = gv_s[t]
            _v_grad(c[i], a_c[b], munu[b], r_s[t], gv)
            for p in range(m):
                c_new[i, p] -= dt * inv_h * (inv_d12 * gv[p] + inv_d22 * gw[p])


@njit(cache=True, parallel=True)
def boundary_implicit(c_new, bnodes, a_c, hv, munu, cb, k4, lam2,
                      dt_eff_v, dt_eff_w, newton_iters):
    """Per-node implicit Euler on the (local) surface penalties.

    Minimizes psi(c) = 0.5 |c - c*|^2 + dt_v V(c) + dt_w W(c) per boundary
    node (the penalty terms couple no neighbors) by damped Newton with a
    steepest-descent fallback when the Newton matrix is indefinite. k4 is
    the symmetric quartic coefficient tensor of W: Hess W(c) =
    4 (k4 : c c - lam2 I); the W-gradient follows from homogeneity as
    H c / 3 - (8/3) lam2 c.
    """
    nb = bnodes.shape[0]
    m = k4.shape[0]
    n = a_c.shape[1]
    nth = get_num_threads()
    mat_s = np.empty((nth, n, n * n))
    gv_s = np.empty((nth, m))
    r_s = np.empty((nth, n))
    pp_s = np.empty((nth, m, m))
    hw_s = np.empty((nth, m, m))
    jac_s = np.empty((nth, m, m))
    f_s = np.empty((nth, m))
    d_s = np.empty((nth, m))
    cc_s = np.empty((nth, m))
    cand_s = np.empty((nth, m))
    for k in prange(nb):
        t = get_thread_id()
        i = bnodes[k]
        gv = gv_s[t]
        pp = pp_s[t]
        hw = hw_s[t]
        jac = jac_s[t]
        fv = f_s[t]
        dv = d_s[t]
        cc = cc_s[t]
        cand = cand_s[t]
        for p in range(m):
            cc[p] = c_new[i, p]
        # psi at the starting point
        v = _v_grad(cc, a_c[k], munu[k], r_s[t], gv)
        w = _w_value(cc, cb, lam2, mat_s[t])
        psi = dt_eff_v * v + dt_eff_w * w
        for _ in range(newton_iters):
            for s in range(m):
                for u in range(m):
                    pp[s, u] = cc[s] * cc[u]
            for p in range(m):
                for r in range(p, m):
                    acc = 0.0
                    for s in range(m):
                        for u in range(m):
                            acc += pp[s, u] * k4[p, r, s, u]
                    val = 4.0 * acc
                    if p == r:
                        val -= 4.0 * lam2
                    hw[p, r] = val
                    hw[r, p] = val
            _v_grad(cc, a_c[k], munu[k], r_s[t], gv)
            gnorm = 0.0
            for p in range(m):
                gwp = -(8.0 / 3.0) * lam2 * cc[p]
                for r in range(m):
                    gwp += hw[p, r] * cc[r] / 3.0
                fv[p] = (cc[p] - c_new[i, p]
                         + dt_eff_v * gv[p] + dt_eff_w * gwp)
                gnorm += fv[p] * fv[p]
            if gnorm < 1e-24:
                break
            for r in range(m):
                for p in range(m):
                    jac[r, p] = dt_eff_v * hv[k, r, p] + dt_eff_w * hw[r, p]
                jac[r, r] += 1.0
            for p in range(m):
                dv[p] = fv[p]
            _solve_inplace(jac, dv)
            slope = 0.0
            for p in range(m):
                dv[p] = -dv[p]
                slope += fv[p] * dv[p]
            if slope >= 0.0:  # indefinite system: steepest descent
                slope = 0.0
                for p in range(m):
                    dv[p] = -fv[p]
                    slope -= fv[p] * fv[p]
            alpha = 1.0
            for _ in range(12):
                dist = 0.0
                for p in range(m):
                    cand[p] = cc[p] + alpha * dv[p]
                    df = cand[p] - c_new[i, p]
                    dist += df * df
                v = _v_grad(cand, a_c[k], munu[k], r_s[t], gv)
                w = _w_value(cand, cb, lam2, mat_s[t])
                psi_cand = 0.5 * dist + dt_eff_v * v + dt_eff_w * w
                if np.isfinite(psi_cand) and \
                        psi_cand <= psi + 1e-4 * alpha * slope:
                    for p in range(m):
                        cc[p] = cand[p]
                    psi = psi_cand
                    break
                alpha *= 0.5
        for p in range(m):
            c_new[i, p] = cc[p]


@njit(cache=True, parallel=True)
def energy_parts(c, nbr, binv, a_c, munu, cb, lam2, per_node):
    """Per-node raw energy pieces: columns (sum |c_fwd - c|^2 over forward
    neighbors, W, V if boundary else 0, |c|^2)."""
    n_nodes, m = c.shape
    n = cb.shape[1]
    nsq = cb.shape[2]
    two_dim = nbr.shape[1]
    dim = two_dim // 2
    nth = get_num_threads()
    mat_s = np.empty((nth, n, nsq))
    gv_s = np.empty((nth, m))
    r_s = np.empty((nth, n))
    for i in prange(n_nodes):
        t = get_thread_id()
        acc = 0.0
        for d in range(dim):
            j = nbr[i, 2 * d]  # forward neighbor slot
            if j >= 0:
                for p in range(m):
                    df = c[j, p] - c[i, p]
                    acc += df * df
        w = _w_value(c[i], cb, lam2, mat_s[t])
        v = 0.0
        b = binv[i]
        if b >= 0:
            v = _v_grad(c[i], a_c[b], munu[b], r_s[t], gv_s[t])
        nrm = 0.0
        for p in range(m):
            nrm += c[i, p] * c[i, p]
        per_node[i, 0] = acc
        per_node[i, 1] = w
        per_node[i, 2] = v
        per_node[i, 3] = nrm
