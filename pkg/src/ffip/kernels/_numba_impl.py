"""Numba-jitted kernel implementations.

Hot inner loops compiled with @njit.  Semantics (including op tallies and
simulation register updates) are bit-identical to ``_numpy_impl``; the parity
tests enforce this.
"""

from __future__ import annotations

import numba
import numpy as np

I8 = np.int64

_jit = numba.njit(cache=True)


@_jit
def gemm_baseline(a, b):
    m, k = a.shape
    n = b.shape[1]
    c = np.zeros((m, n), dtype=I8)
    mults = 0
    adds = 0
    for i in range(m):
        for j in range(n):
            acc = a[i, 0] * b[0, j]
            mults += 1
            for kk in range(1, k):
                acc += a[i, kk] * b[kk, j]
                mults += 1
                adds += 1
            c[i, j] = acc
    return c, mults, adds


@_jit
def alpha(a):
    m, k = a.shape
    out = np.zeros(m, dtype=I8)
    mults = 0
    adds = 0
    for i in range(m):
        acc = a[i, 0] * a[i, 1]
        mults += 1
        for c in range(1, k // 2):
            acc += a[i, 2 * c] * a[i, 2 * c + 1]
            mults += 1
            adds += 1
        out[i] = acc
    return out, mults, adds


@_jit
def beta(b):
    k, n = b.shape
    out = np.zeros(n, dtype=I8)
    mults = 0
    adds = 0
    for j in range(n):
        acc = b[0, j] * b[1, j]
        mults += 1
        for c in range(1, k // 2):
            acc += b[2 * c, j] * b[2 * c + 1, j]
            mults += 1
            adds += 1
        out[j] = acc
    return out, mults, adds


@_jit
def fip_terms(a, b):
    m, k = a.shape
    n = b.shape[1]
    s = np.zeros((m, n), dtype=I8)
    mults = 0
    adds = 0
    pre_mn = a[0, 0] + b[1, 0]
    pre_mx = pre_mn
    p0 = (a[0, 0] + b[1, 0]) * (a[0, 1] + b[0, 0])
    p_mn = p0
    p_mx = p0
    for i in range(m):
        for j in range(n):
            acc = 0
            for c in range(k // 2):
                s1 = a[i, 2 * c] + b[2 * c + 1, j]
                s2 = a[i, 2 * c + 1] + b[2 * c, j]
                adds += 2
                if s1 < pre_mn:
                    pre_mn = s1
                if s1 > pre_mx:
                    pre_mx = s1
                if s2 < pre_mn:
                    pre_mn = s2
                if s2 > pre_mx:
                    pre_mx = s2
                p = s1 * s2
                mults += 1
                if p < p_mn:
                    p_mn = p
                if p > p_mx:
                    p_mx = p
                if c == 0:
                    acc = p
                else:
                    acc += p
                    adds += 1
            s[i, j] = acc
    return s, mults, adds, pre_mn, pre_mx, p_mn, p_mx


@_jit
def ffip_terms(a, y):
    m, k = a.shape
    n = y.shape[1]
    s = np.zeros((m, n), dtype=I8)
    mults = 0
    adds = 0
    g = np.zeros((m, k), dtype=I8)
    g_mn = a[0, 1] + y[0, 0]
    g_mx = g_mn
    p0 = (a[0, 1] + y[0, 0]) * (a[0, 0] + y[1, 0])
    p_mn = p0
    p_mx = p0
    for j in range(n):
        for i in range(m):
            acc = 0
            for c in range(k // 2):
                if j == 0:
                    g1 = a[i, 2 * c + 1] + y[2 * c, 0]
                    g2 = a[i, 2 * c] + y[2 * c + 1, 0]
                else:
                    g1 = g[i, 2 * c] + y[2 * c, j]
                    g2 = g[i, 2 * c + 1] + y[2 * c + 1, j]
                adds += 2
                g[i, 2 * c] = g1
                g[i, 2 * c + 1] = g2
                if g1 < g_mn:
                    g_mn = g1
                if g1 > g_mx:
                    g_mx = g1
                if g2 < g_mn:
                    g_mn = g2
                if g2 > g_mx:
                    g_mx = g2
                p = g1 * g2
                mults += 1
                if p < p_mn:
                    p_mn = p
                if p > p_mx:
                    p_mx = p
                if c == 0:
                    acc = p
                else:
                    acc += p
                    adds += 1
            s[i, j] = acc
    return s, mults, adds, g_mn, g_mx, p_mn, p_mx


@_jit
def conv2d_direct(inp, wt, stride):
    cin, hp, wp = inp.shape
    cout = wt.shape[0]
    kh = wt.shape[2]
    kw = wt.shape[3]
    oh = (hp - kh) // stride + 1
    ow = (wp - kw) // stride + 1
    out = np.zeros((cout, oh, ow), dtype=I8)
    for co in range(cout):
        for oy in range(oh):
            for ox in range(ow):
                acc = 0
                for ci in range(cin):
                    for dh in range(kh):
                        for dw in range(kw):
                            acc += (inp[ci, oy * stride + dh, ox * stride + dw]
                                    * wt[co, ci, dh, dw])
                out[co, oy, ox] = acc
    return out


@_jit
def simulate_tile(variant, a, wmat, dep, bounds, max_cycles):
    r, l = a.shape
    y_rows = wmat.shape[1]
    c_cols = l if variant == 0 else l // 2
    has_alpha = variant != 0
    maxdep = 0
    for k in range(l):
        if dep[k] > maxdep:
            maxdep = dep[k]

    v_lo, v_hi = bounds[0, 0], bounds[0, 1]
    s_lo, s_hi = bounds[1, 0], bounds[1, 1]
    p_lo, p_hi = bounds[2, 0], bounds[2, 1]
    c_lo, c_hi = bounds[3, 0], bounds[3, 1]

    skv = np.zeros((l, maxdep), dtype=I8)
    skvld = np.zeros((l, maxdep), dtype=np.bool_)
    v = np.zeros((y_rows, l), dtype=I8)
    vv = np.zeros((y_rows, l), dtype=np.bool_)
    acc = np.zeros((y_rows, c_cols), dtype=I8)
    accv = np.zeros((y_rows, c_cols), dtype=np.bool_)
    av = np.zeros(l, dtype=I8)
    avv = np.zeros(l, dtype=np.bool_)
    aacc = np.zeros(c_cols, dtype=I8)
    aaccv = np.zeros(c_cols, dtype=np.bool_)

    nv = np.zeros((y_rows, l), dtype=I8)
    nvv = np.zeros((y_rows, l), dtype=np.bool_)
    nacc = np.zeros((y_rows, c_cols), dtype=I8)
    naccv = np.zeros((y_rows, c_cols), dtype=np.bool_)
    n_av = np.zeros(l, dtype=I8)
    n_avv = np.zeros(l, dtype=np.bool_)
    naacc = np.zeros(c_cols, dtype=I8)
    naaccv = np.zeros(c_cols, dtype=np.bool_)
    skew_out = np.zeros(l, dtype=I8)
    skew_ov = np.zeros(l, dtype=np.bool_)

    raw = np.zeros((r, y_rows), dtype=I8)
    alpha_raw = np.zeros(r, dtype=I8)
    out_count = np.zeros(y_rows, dtype=np.int64)
    alpha_count = 0
    busy = np.zeros(max_cycles, dtype=np.int64)
    first_lat = -1
    status = 0
    err_cycle = -1
    total = max_cycles

    for t in range(max_cycles):
        for k in range(l):
            skew_out[k] = skv[k, dep[k] - 1]
            skew_ov[k] = skvld[k, dep[k] - 1]

        n_busy = 0
        for j in range(y_rows):
            for c in range(c_cols):
                if variant == 0:
                    pvalid = vv[j, c]
                    p = v[j, c] * wmat[c, j] if pvalid else 0
                elif variant == 1:
                    pvalid = vv[j, 2 * c] and vv[j, 2 * c + 1]
                    if pvalid:
                        s1 = v[j, 2 * c] + wmat[2 * c + 1, j]
                        s2 = v[j, 2 * c + 1] + wmat[2 * c, j]
                    else:
                        s1 = 0
                        s2 = 0
                    if status == 0 and (s1 < s_lo or s1 > s_hi
                                        or s2 < s_lo or s2 > s_hi):
                        status = 2
                        err_cycle = t
                    p = s1 * s2
                else:
                    pvalid = vv[j, 2 * c] and vv[j, 2 * c + 1]
                    p = v[j, 2 * c] * v[j, 2 * c + 1] if pvalid else 0
                if pvalid:
                    n_busy += 1
                if status == 0 and (p < p_lo or p > p_hi):
                    status = 3
                    err_cycle = t
                left_ok = accv[j, c - 1] if c > 0 else True
                ok = pvalid and left_ok
                naccv[j, c] = ok
                if ok:
                    prev = acc[j, c - 1] if c > 0 else 0
                    val = prev + p
                else:
                    val = 0
                nacc[j, c] = val
                if status == 0 and (val < c_lo or val > c_hi):
                    status = 4
                    err_cycle = t

        if has_alpha:
            for c in range(c_cols):
                apv = avv[2 * c] and avv[2 * c + 1]
                ap = av[2 * c] * av[2 * c + 1] if apv else 0
                if apv:
                    n_busy += 1
                if status == 0 and (ap < p_lo or ap > p_hi):
                    status = 3
                    err_cycle = t
                aleft = aaccv[c - 1] if c > 0 else True
                ok = apv and aleft
                naaccv[c] = ok
                if ok:
                    prev = aacc[c - 1] if c > 0 else 0
                    val = prev + ap
                else:
                    val = 0
                naacc[c] = val
                if status == 0 and (val < c_lo or val > c_hi):
                    status = 4
                    err_cycle = t
        busy[t] = n_busy

        # new vertical registers
        for j in range(y_rows - 1, 0, -1):
            for k in range(l):
                ok = vv[j - 1, k]
                nvv[j, k] = ok
                if ok:
                    if variant == 2:
                        nv[j, k] = v[j - 1, k] + wmat[k, j]
                    else:
                        nv[j, k] = v[j - 1, k]
                else:
                    nv[j, k] = 0
        if variant == 2:
            for c in range(c_cols):
                ok = skew_ov[2 * c] and skew_ov[2 * c + 1]
                nvv[0, 2 * c] = ok
                nvv[0, 2 * c + 1] = ok
                if ok:
                    nv[0, 2 * c] = skew_out[2 * c + 1] + wmat[2 * c, 0]
                    nv[0, 2 * c + 1] = skew_out[2 * c] + wmat[2 * c + 1, 0]
                else:
                    nv[0, 2 * c] = 0
                    nv[0, 2 * c + 1] = 0
        else:
            for k in range(l):
                ok = skew_ov[k]
                nvv[0, k] = ok
                nv[0, k] = skew_out[k] if ok else 0
        if status == 0:
            for j in range(y_rows):
                for k in range(l):
                    if nv[j, k] < v_lo or nv[j, k] > v_hi:
                        status = 1
                        err_cycle = t
        if has_alpha:
            for k in range(l):
                ok = skew_ov[k]
                n_avv[k] = ok
                n_av[k] = skew_out[k] if ok else 0

        if status != 0:
            total = t + 1
            break

        # capture outputs registered at the end of this cycle
        for j in range(y_rows):
            if naccv[j, c_cols - 1] and out_count[j] < r:
                raw[out_count[j], j] = nacc[j, c_cols - 1]
                out_count[j] += 1
                if first_lat < 0:
                    first_lat = t + 1
        if has_alpha and naaccv[c_cols - 1] and alpha_count < r:
            alpha_raw[alpha_count] = naacc[c_cols - 1]
            alpha_count += 1

        # commit registers; shift the skew buffers and feed the next row
        for k in range(l):
            for s in range(maxdep - 1, 0, -1):
                skv[k, s] = skv[k, s - 1]
                skvld[k, s] = skvld[k, s - 1]
            if t < r:
                skv[k, 0] = a[t, k]
                skvld[k, 0] = True
            else:
                skv[k, 0] = 0
                skvld[k, 0] = False
        v, nv = nv, v
        vv, nvv = nvv, vv
        acc, nacc = nacc, acc
        accv, naccv = naccv, accv
        if has_alpha:
            av, n_av = n_av, av
            avv, n_avv = n_avv, avv
            aacc, naacc = naacc, aacc
            aaccv, naaccv = naaccv, aaccv

        done = True
        for j in range(y_rows):
            if out_count[j] < r:
                done = False
        if has_alpha and alpha_count < r:
            done = False
        if done:
            total = t + 1
            break

    return (raw, alpha_raw, out_count, alpha_count, busy[:total],
            first_lat, total, status, err_cycle)
