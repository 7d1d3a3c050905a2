"""Pure-numpy kernel implementations.

Fallback path used when numba is unavailable or disabled via the
FFIP_PURE_NUMPY environment variable.  Must stay bit-identical to the numba
implementations in ``_numba_impl``; the parity tests enforce this.
"""

from __future__ import annotations

import numpy as np

I8 = np.int64


def gemm_baseline(a: np.ndarray, b: np.ndarray):
    """Plain inner-product GEMM. Returns (c, mults, adds)."""
    m, k = a.shape
    n = b.shape[1]
    c = a @ b
    return c, m * n * k, m * n * (k - 1)


def alpha(a: np.ndarray):
    """Per-row self-product correction sums. Returns (alpha, mults, adds)."""
    m, k = a.shape
    al = (a[:, 0::2] * a[:, 1::2]).sum(axis=1)
    return al, m * (k // 2), m * (k // 2 - 1)


def beta(b: np.ndarray):
    """Per-column self-product correction sums. Returns (beta, mults, adds)."""
    k, n = b.shape
    be = (b[0::2, :] * b[1::2, :]).sum(axis=0)
    return be, n * (k // 2), n * (k // 2 - 1)


def fip_terms(a: np.ndarray, b: np.ndarray):
    """Sum of paired cross-term products for the fast inner product.

    Returns (s, mults, adds, presum_min, presum_max, prod_min, prod_max)
    where s[i,j] = sum_c (a[i,2c] + b[2c+1,j]) * (a[i,2c+1] + b[2c,j]).
    """
    m, k = a.shape
    n = b.shape[1]
    s1 = a[:, 0::2, None] + b[1::2, :][None, :, :]
    s2 = a[:, 1::2, None] + b[0::2, :][None, :, :]
    p = s1 * s2
    s = p.sum(axis=1)
    mults = m * n * (k // 2)
    adds = 2 * m * n * (k // 2) + m * n * (k // 2 - 1)
    pre_mn = int(min(s1.min(), s2.min()))
    pre_mx = int(max(s1.max(), s2.max()))
    return s, mults, adds, pre_mn, pre_mx, int(p.min()), int(p.max())


def ffip_terms(a: np.ndarray, y: np.ndarray):
    """Paired-product sums via the row-to-row g recurrence.

    ``y`` is the column-difference transform of the weights.  Returns
    (s, mults, adds, g_min, g_max, prod_min, prod_max).
    """
    m, k = a.shape
    n = y.shape[1]
    s = np.zeros((m, n), dtype=I8)
    # base case: swapped pairing of a against the first y column
    g = np.empty((m, k), dtype=I8)
    g[:, 0::2] = a[:, 1::2] + y[0::2, 0][None, :]
    g[:, 1::2] = a[:, 0::2] + y[1::2, 0][None, :]
    g_mn, g_mx = int(g.min()), int(g.max())
    p = g[:, 0::2] * g[:, 1::2]
    p_mn, p_mx = int(p.min()), int(p.max())
    s[:, 0] = p.sum(axis=1)
    for j in range(1, n):
        g = g + y[:, j][None, :]
        g_mn = min(g_mn, int(g.min()))
        g_mx = max(g_mx, int(g.max()))
        p = g[:, 0::2] * g[:, 1::2]
        p_mn = min(p_mn, int(p.min()))
        p_mx = max(p_mx, int(p.max()))
        s[:, j] = p.sum(axis=1)
    mults = m * n * (k // 2)
    adds = m * n * k + m * n * (k // 2 - 1)
    return s, mults, adds, g_mn, g_mx, p_mn, p_mx


def conv2d_direct(inp: np.ndarray, wt: np.ndarray, stride: int):
    """Direct convolution over a pre-padded input.

    inp: (Cin, Hp, Wp), wt: (Cout, Cin, KH, KW) -> (Cout, OH, OW).
    """
    cin, hp, wp = inp.shape
    cout, _, kh, kw = wt.shape
    oh = (hp - kh) // stride + 1
    ow = (wp - kw) // stride + 1
    out = np.zeros((cout, oh, ow), dtype=I8)
    for dh in range(kh):
        for dw in range(kw):
            patch = inp[:, dh:dh + (oh - 1) * stride + 1:stride,
                        dw:dw + (ow - 1) * stride + 1:stride]
            out += np.tensordot(wt[:, :, dh, dw], patch, axes=(1, 0))
    return out


def _range_bad(arr: np.ndarray, lo: int, hi: int) -> bool:
    return arr.size > 0 and (int(arr.min()) < lo or int(arr.max()) > hi)


def simulate_tile(variant: int, a: np.ndarray, wmat: np.ndarray,
                  dep: np.ndarray, bounds: np.ndarray, max_cycles: int):
    """Clocked weight-stationary array simulation of one tile.

    variant: 0 baseline, 1 fip, 2 ffip.  ``a`` is (R, L) with L the lane
    count (= X); ``wmat`` is (L, Y) holding b (baseline/fip) or y (ffip).
    ``dep`` gives the per-lane skew shift-register depth.  ``bounds`` is a
    (4, 2) array of inclusive [lo, hi] ranges for the vertical registers,
    pre-adder sums, products, and accumulators.

    Returns (raw, alpha_raw, out_count, alpha_count, busy, first_latency,
    total_cycles, status, err_cycle) where status is 0 on success or the
    1-based index of the violated bound class.
    """
    r, l = a.shape
    y_rows = wmat.shape[1]
    c_cols = l if variant == 0 else l // 2
    has_alpha = variant != 0
    maxdep = int(dep.max())
    lanes = np.arange(l)

    v_lo, v_hi = int(bounds[0, 0]), int(bounds[0, 1])
    s_lo, s_hi = int(bounds[1, 0]), int(bounds[1, 1])
    p_lo, p_hi = int(bounds[2, 0]), int(bounds[2, 1])
    c_lo, c_hi = int(bounds[3, 0]), int(bounds[3, 1])

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

    raw = np.zeros((r, y_rows), dtype=I8)
    alpha_raw = np.zeros(r, dtype=I8)
    out_count = np.zeros(y_rows, dtype=np.int64)
    alpha_count = 0
    busy = np.zeros(max_cycles, dtype=np.int64)
    first_lat = -1
    status = 0
    err_cycle = -1
    total = max_cycles
    wt = wmat.T  # (Y, L); wt[j] is the weight column held by array row j

    for t in range(max_cycles):
        skew_out = skv[lanes, dep - 1]
        skew_ov = skvld[lanes, dep - 1]

        # products and accumulator pipeline from old register state
        if variant == 0:
            pv = vv
            p = np.where(pv, v * wt, 0)
            s1 = s2 = None
        elif variant == 1:
            pv = vv[:, 0::2] & vv[:, 1::2]
            s1 = np.where(pv, v[:, 0::2] + wt[:, 1::2], 0)
            s2 = np.where(pv, v[:, 1::2] + wt[:, 0::2], 0)
            p = s1 * s2
        else:
            pv = vv[:, 0::2] & vv[:, 1::2]
            p = np.where(pv, v[:, 0::2] * v[:, 1::2], 0)
            s1 = s2 = None
        left_ok = np.concatenate(
            [np.ones((y_rows, 1), dtype=np.bool_), accv[:, :-1]], axis=1)
        nav = pv & left_ok
        shifted = np.concatenate(
            [np.zeros((y_rows, 1), dtype=I8), acc[:, :-1]], axis=1)
        nacc = np.where(nav, shifted + p, 0)
        n_busy = int(pv.sum())

        if has_alpha:
            apv = avv[0::2] & avv[1::2]
            ap = np.where(apv, av[0::2] * av[1::2], 0)
            aleft = np.concatenate(
                [np.ones(1, dtype=np.bool_), aaccv[:-1]])
            naaccv = apv & aleft
            ashift = np.concatenate([np.zeros(1, dtype=I8), aacc[:-1]])
            naacc = np.where(naaccv, ashift + ap, 0)
            n_busy += int(apv.sum())
        busy[t] = n_busy

        # new vertical registers
        if variant == 2:
            g0 = np.empty(l, dtype=I8)
            g0[0::2] = skew_out[1::2] + wmat[0::2, 0]
            g0[1::2] = skew_out[0::2] + wmat[1::2, 0]
            pairv = skew_ov[0::2] & skew_ov[1::2]
            g0v = np.empty(l, dtype=np.bool_)
            g0v[0::2] = pairv
            g0v[1::2] = pairv
            rest = v[:-1] + wt[1:]
            nv = np.concatenate([g0[None, :], rest], axis=0)
            nvv = np.concatenate([g0v[None, :], vv[:-1]], axis=0)
        else:
            nv = np.concatenate([skew_out[None, :], v[:-1]], axis=0)
            nvv = np.concatenate([skew_ov[None, :], vv[:-1]], axis=0)
        nv = np.where(nvv, nv, 0)
        if has_alpha:
            n_av = np.where(skew_ov, skew_out, 0)
            n_avv = skew_ov.copy()

        # width-fit checks on the freshly registered values
        if status == 0:
            if _range_bad(nv, v_lo, v_hi):
                status, err_cycle = 1, t
            elif s1 is not None and (_range_bad(s1, s_lo, s_hi)
                                     or _range_bad(s2, s_lo, s_hi)):
                status, err_cycle = 2, t
            elif _range_bad(p, p_lo, p_hi) or (
                    has_alpha and _range_bad(ap, p_lo, p_hi)):
                status, err_cycle = 3, t
            elif _range_bad(nacc, c_lo, c_hi) or (
                    has_alpha and _range_bad(naacc, c_lo, c_hi)):
                status, err_cycle = 4, t
            if status != 0:
                total = t + 1
                break

        # capture outputs registered at the end of this cycle
        mask = nav[:, c_cols - 1] & (out_count < r)
        js = np.nonzero(mask)[0]
        if js.size:
            raw[out_count[js], js] = nacc[js, c_cols - 1]
            out_count[js] += 1
            if first_lat < 0:
                first_lat = t + 1
        if has_alpha and naaccv[c_cols - 1] and alpha_count < r:
            alpha_raw[alpha_count] = naacc[c_cols - 1]
            alpha_count += 1

        # commit registers; shift the skew buffers and feed the next row
        skv[:, 1:] = skv[:, :-1]
        skvld[:, 1:] = skvld[:, :-1]
        if t < r:
            skv[:, 0] = a[t]
            skvld[:, 0] = True
        else:
            skv[:, 0] = 0
            skvld[:, 0] = False
        v, vv, acc, accv = nv, nvv, nacc, nav
        if has_alpha:
            av, avv, aacc, aaccv = n_av, n_avv, naacc, naaccv

        if int(out_count.min()) == r and (not has_alpha or alpha_count == r):
            total = t + 1
            break

    return (raw, alpha_raw, out_count, alpha_count, busy[:total],
            first_lat, total, status, err_cycle)
