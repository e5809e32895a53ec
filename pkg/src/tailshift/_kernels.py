"""Compiled inner loops.

Everything here is deterministic and single-threaded: a fixed input always
produces bit-identical output regardless of how callers schedule work. The
order-statistic structure is a pair of Fenwick trees over rank space (one
holding counts, one holding weights), giving O(log n) insert and
order-statistic / prefix-sum queries.

Rank-space conventions shared by all kernels:

* ``ranks[j]`` is the 0-based position of observation j in a stable sort of
  the whole series;
* ``sorted_vals`` is the sorted series;
* ``group_lo[r]`` is the first sorted position holding a value equal to
  ``sorted_vals[r]``; ties are therefore contiguous in rank space, which is
  what makes the tie-inclusive exceedance sum exact.

``kind`` selects the segment functional: 0 = tail average of the supplied
weights divided by (1-p) (expected shortfall when weights are the raw
values, conditional tail moment when they are powers), 1 = the order
statistic itself (value-at-risk).
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit


@njit(cache=True)
def _var_rank(length, p):
    # ceil(length*p) with a guard against float boundary error, clipped to [1, length]
    k = int(math.ceil(length * p - 1e-12))
    if k < 1:
        k = 1
    if k > length:
        k = length
    return k


@njit(cache=True)
def _fenwick_insert(cnt, wsum, size, pos1, w):
    i = pos1
    while i <= size:
        cnt[i] += 1
        wsum[i] += w
        i += i & (-i)


@njit(cache=True)
def _fenwick_kth(cnt, size, k):
    # 0-based sorted position of the k-th smallest inserted element
    pos = 0
    rem = k
    bit = size
    while bit > 0:
        nxt = pos + bit
        if nxt <= size and cnt[nxt] < rem:
            rem -= cnt[nxt]
            pos = nxt
        bit >>= 1
    return pos


@njit(cache=True)
def _fenwick_prefix_w(wsum, pos1):
    s = 0.0
    i = pos1
    while i > 0:
        s += wsum[i]
        i -= i & (-i)
    return s


@njit(cache=True)
def _tree_size(n):
    size = 1
    while size < n:
        size <<= 1
    return size


@njit(cache=True)
def segment_tail_path(weights, ranks, sorted_vals, group_lo, p, kind, out):
    """Measure estimate on every window [1..i], written to out[i-1].

    One left-to-right sweep: insert observation i, query the current
    multiset. Cost O(n log n).
    """
    n = ranks.shape[0]
    size = _tree_size(n)
    cnt = np.zeros(size + 1, dtype=np.int64)
    wsum = np.zeros(size + 1, dtype=np.float64)
    inv = 1.0 / (1.0 - p)
    for i in range(1, n + 1):
        _fenwick_insert(cnt, wsum, size, ranks[i - 1] + 1, weights[i - 1])
        k = _var_rank(i, p)
        pos = _fenwick_kth(cnt, size, k)
        if kind == 1:
            out[i - 1] = sorted_vals[pos]
        else:
            below = _fenwick_prefix_w(wsum, group_lo[pos])
            total = wsum[size]
            out[i - 1] = (total - below) * inv / i
    return out


@njit(cache=True)
def allpairs_segment_matrix(weights, ranks, sorted_vals, group_lo, p, kind, out):
    """Measure estimate on every segment [l..m], written to out[l, m] (1-based).

    For each right endpoint m the left endpoint sweeps m -> 1 against fresh
    trees, so the total cost is O(n^2 log n). ``out`` must be an
    (n+2) x (n+2) array (row/column 0 unused).
    """
    n = ranks.shape[0]
    size = _tree_size(n)
    cnt = np.zeros(size + 1, dtype=np.int64)
    wsum = np.zeros(size + 1, dtype=np.float64)
    inv = 1.0 / (1.0 - p)
    for m in range(1, n + 1):
        for j in range(size + 1):
            cnt[j] = 0
            wsum[j] = 0.0
        for l in range(m, 0, -1):
            _fenwick_insert(cnt, wsum, size, ranks[l - 1] + 1, weights[l - 1])
            length = m - l + 1
            k = _var_rank(length, p)
            pos = _fenwick_kth(cnt, size, k)
            if kind == 1:
                out[l, m] = sorted_vals[pos]
            else:
                below = _fenwick_prefix_w(wsum, group_lo[pos])
                total = wsum[size]
                out[l, m] = (total - below) * inv / length
    return out


@njit(cache=True)
def inner_split_sums(M, n, i_min):
    """Candidate-independent inner sums of the multiple-change denominators.

    fwd[a] = sum_i i^2 (a-i)^2 (M[1,i] - M[i+1,a])^2 over admissible splits
    of the window [1..a]; bwd[d] is the mirrored sum over windows [d..n].
    Terms whose inner segment is shorter than i_min are skipped.
    """
    fwd = np.zeros(n + 2, dtype=np.float64)
    bwd = np.zeros(n + 2, dtype=np.float64)
    for a in range(1, n + 1):
        s = 0.0
        for i in range(i_min, a - i_min + 1):
            diff = M[1, i] - M[i + 1, a]
            w = float(i) * float(i) * float(a - i) * float(a - i)
            s += w * diff * diff
        fwd[a] = s
    for d in range(1, n + 1):
        s = 0.0
        for i in range(d + i_min, n - i_min + 2):
            diff = M[i, n] - M[d, i - 1]
            w = float(i - d) * float(i - d) * float(n - i + 1) * float(n - i + 1)
            s += w * diff * diff
        bwd[d] = s
    return fwd, bwd


@njit(cache=True)
def multi_ratio_scan(
    M,
    fwd_inner,
    bwd_inner,
    n,
    i_min,
    b_arr,
    a_lo_arr,
    a_hi_arr,
    c_arr,
    d_lo_arr,
    d_hi_arr,
    fwd_ratio,
    bwd_ratio,
):
    """Forward and backward self-normalized ratios of the multiple-change test.

    fwd_ratio[bi, a] gets C/D for the forward candidate (a, b_arr[bi]);
    bwd_ratio[ci, d] likewise for the backward candidate (c_arr[ci], d).
    Entries stay NaN for skipped candidates (inner segments below i_min, or
    an identically zero denominator).
    """
    for bi in range(b_arr.shape[0]):
        b = b_arr[bi]
        fb = float(b)
        for a in range(a_lo_arr[bi], a_hi_arr[bi] + 1):
            if a < i_min or b - a < i_min:
                continue
            diff = M[1, a] - M[a + 1, b]
            fa = float(a)
            cval = fa * fa * (fb - fa) * (fb - fa) / (fb * fb * fb) * diff * diff
            den = fwd_inner[a] / (fb * fb * fa * fa)
            s2 = 0.0
            for i in range(a + 1 + i_min, b - i_min + 2):
                dd = M[a + 1, i - 1] - M[i, b]
                w = float(i - 1 - a) * float(i - 1 - a) * float(b - i + 1) * float(b - i + 1)
                s2 += w * dd * dd
            den += s2 / (fb * fb * (fb - fa) * (fb - fa))
            if den > 0.0:
                fwd_ratio[bi, a] = cval / den
    fn = float(n)
    for ci in range(c_arr.shape[0]):
        c = c_arr[ci]
        fc = float(c)
        for d in range(d_lo_arr[ci], d_hi_arr[ci] + 1):
            if d - c < i_min or n - d + 1 < i_min:
                continue
            if n - d - 1 <= 0:
                # the printed backward denominator carries (n - d - 1)^2
                continue
            diff = M[d, n] - M[c, d - 1]
            fd = float(d)
            top = (fd - fc) * (fd - fc) * (fn - fd + 1.0) * (fn - fd + 1.0)
            cval = top / ((fn - fc + 1.0) ** 3) * diff * diff
            s1 = 0.0
            for i in range(c + i_min - 1, d - i_min):
                dd = M[c, i] - M[i + 1, d - 1]
                w = float(i - c + 1) * float(i - c + 1) * float(d - 1 - i) * float(d - 1 - i)
                s1 += w * dd * dd
            den = s1 / ((fn - fc + 1.0) * (fn - fc + 1.0) * (fd - fc) * (fd - fc))
            den += bwd_inner[d] / (
                (fn - fc + 1.0) * (fn - fc + 1.0) * (fn - fd - 1.0) * (fn - fd - 1.0)
            )
            if den > 0.0:
                bwd_ratio[ci, d] = cval / den


@njit(cache=True)
def _cj(k):
    # sum of j for j < k
    return 0.5 * float(k) * float(k - 1)


@njit(cache=True)
def _cj2(k):
    # sum of j^2 for j < k
    return float(k - 1) * float(k) * float(2 * k - 1) / 6.0


@njit(cache=True)
def multi_limit_scan(W, b_arr, a_lo_arr, a_hi_arr, c_arr, d_lo_arr, d_hi_arr):
    """Forward and backward suprema of the multiple-change limit functional.

    ``W`` holds the path on the lattice j/N, j = 0..N. Grid fractions have
    been mapped to lattice indices by the caller. Integrals are left-endpoint
    Riemann sums with step 1/N, evaluated in O(1) per candidate from
    cumulative sums.
    """
    N = W.shape[0] - 1
    fN = float(N)
    cW = np.zeros(N + 2, dtype=np.float64)
    cW2 = np.zeros(N + 2, dtype=np.float64)
    cjW = np.zeros(N + 2, dtype=np.float64)
    for j in range(N + 1):
        w = W[j]
        cW[j + 1] = cW[j] + w
        cW2[j + 1] = cW2[j] + w * w
        cjW[j + 1] = cjW[j] + j * w

    fwd_sup = np.nan
    for bi in range(b_arr.shape[0]):
        j2 = b_arr[bi]
        s2 = float(j2) / fN
        w2 = W[j2]
        for j1 in range(a_lo_arr[bi], a_hi_arr[bi] + 1):
            w1 = W[j1]
            s1f = float(j1)
            cnum = w1 - s1f / float(j2) * w2
            cval = cnum * cnum / (s2 * s2)
            # integral over [0, s1] of the inner bridge around the window [0, s1]
            g1 = w1 / s1f
            t1 = cW2[j1] - 2.0 * g1 * cjW[j1] + g1 * g1 * _cj2(j1)
            # integral over [s1, s2]
            bslope = (w2 - w1) / float(j2 - j1)
            kconst = w2 - float(j2) * bslope
            cnt = float(j2 - j1)
            dW = cW[j2] - cW[j1]
            dW2 = cW2[j2] - cW2[j1]
            djW = cjW[j2] - cjW[j1]
            dj = _cj(j2) - _cj(j1)
            dj2 = _cj2(j2) - _cj2(j1)
            t2 = (
                kconst * kconst * cnt
                + dW2
                + bslope * bslope * dj2
                - 2.0 * kconst * dW
                + 2.0 * kconst * bslope * dj
                - 2.0 * bslope * djW
            )
            den = (t1 + t2) / fN / (s2 * s2)
            if den > 0.0:
                r = cval / den
                if not (r <= fwd_sup):
                    fwd_sup = r
    bwd_sup = np.nan
    wN = W[N]
    for ci in range(c_arr.shape[0]):
        jc = c_arr[ci]
        t1f = float(jc) / fN
        wc = W[jc]
        span = 1.0 - t1f
        for jd in range(d_lo_arr[ci], d_hi_arr[ci] + 1):
            wd = W[jd]
            cnum = wd - wc - float(jd - jc) / float(N - jc) * (wN - wc)
            cval = cnum * cnum / (span * span)
            # integral over [t1, t2]
            b1 = (wd - wc) / float(jd - jc)
            k1 = wc - float(jc) * b1
            cnt = float(jd - jc)
            dW = cW[jd] - cW[jc]
            dW2 = cW2[jd] - cW2[jc]
            djW = cjW[jd] - cjW[jc]
            dj = _cj(jd) - _cj(jc)
            dj2 = _cj2(jd) - _cj2(jc)
            t1 = (
                dW2
                + k1 * k1 * cnt
                + b1 * b1 * dj2
                - 2.0 * k1 * dW
                - 2.0 * b1 * djW
                + 2.0 * k1 * b1 * dj
            )
            # integral over [t2, 1]
            b2 = (wN - wd) / float(N - jd)
            k2 = wN - fN * b2
            cnt2 = float(N - jd)
            dW_2 = cW[N] - cW[jd]
            dW2_2 = cW2[N] - cW2[jd]
            djW_2 = cjW[N] - cjW[jd]
            dj_2 = _cj(N) - _cj(jd)
            dj2_2 = _cj2(N) - _cj2(jd)
            t2 = (
                k2 * k2 * cnt2
                + dW2_2
                + b2 * b2 * dj2_2
                - 2.0 * k2 * dW_2
                + 2.0 * k2 * b2 * dj_2
                - 2.0 * b2 * djW_2
            )
            den = (t1 + t2) / fN / (span * span)
            if den > 0.0:
                r = cval / den
                if not (r <= bwd_sup):
                    bwd_sup = r
    return fwd_sup, bwd_sup


@njit(cache=True)
def ar1_recursion(x0, phi, eps, out):
    """out[t+1] = phi * out[t] + eps[t], out[0] = x0."""
    out[0] = x0
    for t in range(eps.shape[0]):
        out[t + 1] = phi * out[t] + eps[t]


@njit(cache=True)
def arch1_recursion(x0, beta, lam, eps, out):
    """out[t+1] = sqrt(beta + lam[t] * out[t]^2) * eps[t], out[0] = x0."""
    out[0] = x0
    for t in range(eps.shape[0]):
        out[t + 1] = math.sqrt(beta + lam[t] * out[t] * out[t]) * eps[t]
