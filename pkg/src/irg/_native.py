"""Compiled inner loops: SplitMix64 streams, kernel evaluation, edge samplers, union-find.

Kernels reach this module in a flat form ``(code, params)`` where ``params[0]`` is
always the multiplicative factor, so scaling a kernel only touches one slot.
"""

import numpy as np
from numba import njit

CONSTANT = 0
BLOCK = 1
TORUS_BAND = 2
TORUS_PROFILE = 3
COUNTEREXAMPLE = 4

GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)
_ONE = np.uint64(1)
_TWO_M53 = 1.0 / 9007199254740992.0


@njit(cache=True)
def _fmix(z):
    z = (z ^ (z >> _S30)) * _M1
    z = (z ^ (z >> _S27)) * _M2
    return z ^ (z >> _S31)


@njit(cache=True)
def draw_u64(seed, k):
    # k-th output (0-based) of a SplitMix64 generator started at `seed`
    return _fmix(seed + (k + _ONE) * GOLDEN)


@njit(cache=True)
def draw_unit(seed, k):
    return np.float64(draw_u64(seed, k) >> _S11) * _TWO_M53


@njit(cache=True)
def fill_u64(seed, start, out):
    k = start
    for t in range(out.shape[0]):
        out[t] = draw_u64(seed, k)
        k += _ONE


@njit(cache=True)
def fill_unit(seed, start, out):
    k = start
    for t in range(out.shape[0]):
        out[t] = draw_unit(seed, k)
        k += _ONE


@njit(cache=True)
def circ_dist(x, y):
    d = abs(x - y)
    e = 1.0 - d
    return d if d <= e else e


@njit(cache=True, error_model="numpy")
def kernel_value(code, params, x, y):
    f = params[0]
    if code == CONSTANT:
        return f
    if code == BLOCK:
        m = int(params[1])
        i = int(x)
        j = int(y)
        if i > j:
            i, j = j, i
        return f * params[2 + i * m + j]
    if code == TORUS_BAND:
        if circ_dist(x, y) <= params[1]:
            return f
        return 0.0
    if code == TORUS_PROFILE:
        nb = int(params[1])
        d = circ_dist(x, y)
        k = 0
        while k < nb and params[2 + k] < d:
            k += 1
        return f * params[2 + nb + k]
    if code == COUNTEREXAMPLE:
        v = 0.0
        if x / 2.0 <= y and y <= x:
            v += f / x
        if y / 2.0 <= x and x <= y:
            v += f / y
        return v
    return np.nan


@njit(cache=True, error_model="numpy")
def kernel_values(code, params, xs, ys):
    out = np.empty(xs.shape[0])
    for t in range(xs.shape[0]):
        out[t] = kernel_value(code, params, xs[t], ys[t])
    return out


@njit(cache=True)
def _grow(buf, used):
    if used < buf.shape[0]:
        return buf
    bigger = np.empty((2 * buf.shape[0] + 16, 2), dtype=np.int64)
    bigger[:used] = buf[:used]
    return bigger


@njit(cache=True, error_model="numpy")
def sample_naive(code, params, pos, p_n, seed):
    """One draw per pair, lexicographic (i, j), i < j. Returns 0-based edges."""
    n = pos.shape[0]
    buf = np.empty((max(16, n), 2), dtype=np.int64)
    m = 0
    k = np.uint64(0)
    for i in range(n - 1):
        xi = pos[i]
        for j in range(i + 1, n):
            u = draw_unit(seed, k)
            k += _ONE
            p = kernel_value(code, params, xi, pos[j]) * p_n
            if u < p:
                buf = _grow(buf, m)
                buf[m, 0] = i
                buf[m, 1] = j
                m += 1
    return buf[:m].copy()


@njit(cache=True, error_model="numpy")
def sample_skip(code, params, pos, p_n, k_sup, gap_seed, thin_seed):
    """Geometric skipping over the lexicographic pair sequence, then thinning."""
    n = pos.shape[0]
    buf = np.empty((max(16, n), 2), dtype=np.int64)
    m = 0
    p_sup = k_sup * p_n
    if p_sup > 1.0:
        p_sup = 1.0
    if n < 2 or not p_sup > 0.0:
        return buf[:0].copy()
    total = n * (n - 1) // 2
    log_q = np.log1p(-p_sup) if p_sup < 1.0 else 0.0
    kg = np.uint64(0)
    kt = np.uint64(0)
    cur = -1
    row = 0
    row_start = 0
    row_len = n - 1
    while True:
        if p_sup < 1.0:
            u = draw_unit(gap_seed, kg)
            kg += _ONE
            gap = np.floor(np.log1p(-u) / log_q)
            if gap >= total - cur - 1:
                break
            cur += 1 + int(gap)
        else:
            cur += 1
            if cur >= total:
                break
        while cur >= row_start + row_len:
            row_start += row_len
            row += 1
            row_len -= 1
        j = row + 1 + (cur - row_start)
        p = kernel_value(code, params, pos[row], pos[j]) * p_n
        u2 = draw_unit(thin_seed, kt)
        kt += _ONE
        if u2 * p_sup < p:
            buf = _grow(buf, m)
            buf[m, 0] = row
            buf[m, 1] = j
            m += 1
    return buf[:m].copy()


@njit(cache=True, error_model="numpy")
def sample_banded(code, params, pos, p_n, gap_seed, thin_seed):
    """Sampler for scale-local kernels: for u < v, K(u, v) = 0 unless u >= v/2, and
    K(u, v) <= f/v there (f = params[0]).

    Vertices are visited in increasing position. The partners of the vertex at v with
    positions in [v/2, v) are scanned by geometric skipping at rate min(1, f p_n / v),
    candidates being thinned only when their probability falls below that rate;
    partners at exactly v (ties) get one direct draw each.
    """
    n = pos.shape[0]
    buf = np.empty((max(16, n), 2), dtype=np.int64)
    m = 0
    order = np.argsort(pos, kind="mergesort")
    s = pos[order]
    f = params[0]
    kg = np.uint64(0)
    kt = np.uint64(0)
    for r in range(1, n):
        v = s[r]
        lo = np.searchsorted(s, v / 2.0, side="left")
        tie = np.searchsorted(s, v, side="left")
        q = f * p_n / v if v > 0.0 else 1.0
        if q > 1.0:
            q = 1.0
        width = tie - lo
        if width > 0 and q > 0.0:
            log_q = np.log1p(-q) if q < 1.0 else 0.0
            cur = -1
            while True:
                if q < 1.0:
                    u = draw_unit(gap_seed, kg)
                    kg += _ONE
                    gap = np.floor(np.log1p(-u) / log_q)
                    if gap >= width - cur - 1:
                        break
                    cur += 1 + int(gap)
                else:
                    cur += 1
                    if cur >= width:
                        break
                t = lo + cur
                p = kernel_value(code, params, s[t], v) * p_n
                keep = p >= q
                if not keep:
                    u2 = draw_unit(thin_seed, kt)
                    kt += _ONE
                    keep = u2 * q < p
                if keep:
                    buf = _grow(buf, m)
                    buf[m, 0] = order[t]
                    buf[m, 1] = order[r]
                    m += 1
        for t in range(tie, r):
            p = kernel_value(code, params, s[t], v) * p_n
            u2 = draw_unit(thin_seed, kt)
            kt += _ONE
            if u2 < p:
                buf = _grow(buf, m)
                buf[m, 0] = order[t]
                buf[m, 1] = order[r]
                m += 1
    for t in range(m):
        if buf[t, 0] > buf[t, 1]:
            a = buf[t, 0]
            buf[t, 0] = buf[t, 1]
            buf[t, 1] = a
    return buf[:m].copy()


@njit(cache=True)
def _find(parent, x):
    root = x
    while parent[root] != root:
        root = parent[root]
    while parent[x] != root:
        nxt = parent[x]
        parent[x] = root
        x = nxt
    return root


@njit(cache=True)
def union_find_labels(n, edges):
    """Union by size with full path compression. `edges` are 0-based.

    Returns (root label per vertex, component size per root slot).
    """
    parent = np.arange(n)
    size = np.ones(n, dtype=np.int64)
    for t in range(edges.shape[0]):
        a = _find(parent, edges[t, 0])
        b = _find(parent, edges[t, 1])
        if a == b:
            continue
        if size[a] < size[b]:
            a, b = b, a
        parent[b] = a
        size[a] += size[b]
    for x in range(n):
        parent[x] = _find(parent, x)
    return parent, size
