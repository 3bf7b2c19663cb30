"""Compiled hot loops for the Louvain optimizer.

The local-move sweeps and the community-graph aggregation dominate run
time, so they are jitted with numba (nogil: independent runs can overlap
in a thread pool). Everything else stays in plain numpy.

Randomness comes from an in-kernel splitmix64 generator: a named,
portable 64-bit PRNG whose state is a single uint64, which makes per-run
seeding (base_seed + run_index) trivial and keeps visit orders bit-stable
across platforms and numba versions.
"""

from __future__ import annotations

import numpy as np
from numba import njit

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX_1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX_2 = np.uint64(0x94D049BB133111EB)
_SH30 = np.uint64(30)
_SH27 = np.uint64(27)
_SH31 = np.uint64(31)


@njit(cache=True, nogil=True, inline="always")
def _splitmix_next(state):
    """Advance the uint64[1] state and return the next 64-bit value."""
    state[0] = state[0] + _GOLDEN
    z = state[0]
    z = (z ^ (z >> _SH30)) * _MIX_1
    z = (z ^ (z >> _SH27)) * _MIX_2
    return z ^ (z >> _SH31)


@njit(cache=True, nogil=True)
def shuffle_in_place(state, order):
    """Fisher-Yates shuffle driven by splitmix64.

    Modulo draw; the bias is irrelevant at graph sizes (bound << 2^64)
    and determinism is what matters here.
    """
    for i in range(order.size - 1, 0, -1):
        j = int(_splitmix_next(state) % np.uint64(i + 1))
        tmp = order[i]
        order[i] = order[j]
        order[j] = tmp


@njit(cache=True, nogil=True)
def local_moves_unipartite(
    indptr, indices, weights, strengths, total_w, labels, state, min_gain
):
    """Sweep nodes in seeded random order, applying best positive moves.

    Repeats full passes until one pass gains less than ``min_gain``.
    ``labels`` is updated in place; community ids live in [0, n).
    Returns (total_gain, moved_any). Candidate scores are kept in weight
    units, r(C) = k_u->C - S_C * s_u / (2W), so dQ = (r_target - r_stay)/W.
    """
    n = labels.size
    comm_s = np.zeros(n, dtype=np.float64)
    for u in range(n):
        comm_s[labels[u]] += strengths[u]
    ncw = np.zeros(n, dtype=np.float64)
    touched = np.empty(n, dtype=np.int64)
    order = np.arange(n, dtype=np.int64)
    inv_w = 1.0 / total_w
    total_gain = 0.0
    moved_any = False
    while True:
        shuffle_in_place(state, order)
        pass_gain = 0.0
        for oi in range(n):
            u = order[oi]
            cu = labels[u]
            su = strengths[u]
            nt = 0
            for e in range(indptr[u], indptr[u + 1]):
                c = labels[indices[e]]
                if ncw[c] == 0.0:
                    touched[nt] = c
                    nt += 1
                ncw[c] += weights[e]
            comm_s[cu] -= su
            half = su * inv_w * 0.5
            r_stay = ncw[cu] - comm_s[cu] * half
            best_c = -1
            best_r = -1.0e300
            for t in range(nt):
                c = touched[t]
                if c == cu:
                    continue
                r = ncw[c] - comm_s[c] * half
                if r > best_r or (r == best_r and c < best_c):
                    best_c = c
                    best_r = r
            if best_c >= 0 and best_r > r_stay:
                labels[u] = best_c
                comm_s[best_c] += su
                pass_gain += (best_r - r_stay) * inv_w
                moved_any = True
            else:
                comm_s[cu] += su
            for t in range(nt):
                ncw[touched[t]] = 0.0
        total_gain += pass_gain
        if pass_gain < min_gain:
            break
    return total_gain, moved_any


@njit(cache=True, nogil=True)
def local_moves_bipartite(
    indptr, indices, weights, d, g, total_m, labels, state, min_gain
):
    """Bipartite-modularity counterpart of the unipartite sweep.

    Every (meta-)node carries a left-mass/right-mass pair (d, g); the
    candidate score is r(C) = e_u->C - (d_u * G_C + g_u * D_C) / m with u
    removed from its community first, so dQ_B = (r_target - r_stay)/m.
    """
    n = labels.size
    comm_d = np.zeros(n, dtype=np.float64)
    comm_g = np.zeros(n, dtype=np.float64)
    for u in range(n):
        comm_d[labels[u]] += d[u]
        comm_g[labels[u]] += g[u]
    ncw = np.zeros(n, dtype=np.float64)
    touched = np.empty(n, dtype=np.int64)
    order = np.arange(n, dtype=np.int64)
    inv_m = 1.0 / total_m
    total_gain = 0.0
    moved_any = False
    while True:
        shuffle_in_place(state, order)
        pass_gain = 0.0
        for oi in range(n):
            u = order[oi]
            cu = labels[u]
            du = d[u]
            gu = g[u]
            nt = 0
            for e in range(indptr[u], indptr[u + 1]):
                c = labels[indices[e]]
                if ncw[c] == 0.0:
                    touched[nt] = c
                    nt += 1
                ncw[c] += weights[e]
            comm_d[cu] -= du
            comm_g[cu] -= gu
            r_stay = ncw[cu] - (du * comm_g[cu] + gu * comm_d[cu]) * inv_m
            best_c = -1
            best_r = -1.0e300
            for t in range(nt):
                c = touched[t]
                if c == cu:
                    continue
                r = ncw[c] - (du * comm_g[c] + gu * comm_d[c]) * inv_m
                if r > best_r or (r == best_r and c < best_c):
                    best_c = c
                    best_r = r
            if best_c >= 0 and best_r > r_stay:
                labels[u] = best_c
                comm_d[best_c] += du
                comm_g[best_c] += gu
                pass_gain += (best_r - r_stay) * inv_m
                moved_any = True
            else:
                comm_d[cu] += du
                comm_g[cu] += gu
            for t in range(nt):
                ncw[touched[t]] = 0.0
        total_gain += pass_gain
        if pass_gain < min_gain:
            break
    return total_gain, moved_any


@njit(cache=True, nogil=True)
def aggregate_dense(eu, ev, ew, selfw, labels, k):
    """Collapse a labelled graph into its community graph via a k x k grid.

    Cross-community weight lands in upper-triangle cells; intra weight and
    existing self-loops fold into the new self-loop vector. Output edges
    come out in lexicographic (u, v) order. O(E + k^2); callers cap k.
    """
    acc = np.zeros((k, k), dtype=np.float64)
    self_nodes = np.zeros(k, dtype=np.float64)
    self_edges = np.zeros(k, dtype=np.float64)
    for i in range(selfw.size):
        self_nodes[labels[i]] += selfw[i]
    for e in range(eu.size):
        a = labels[eu[e]]
        b = labels[ev[e]]
        if a == b:
            self_edges[a] += ew[e]
        else:
            if a > b:
                t = a
                a = b
                b = t
            acc[a, b] += ew[e]
    # summed as (edge total + node total) per community, matching the
    # bincount-based fallback path bit for bit
    self2 = self_edges + self_nodes
    cnt = 0
    for a in range(k):
        for b in range(a + 1, k):
            if acc[a, b] != 0.0:
                cnt += 1
    u2 = np.empty(cnt, dtype=np.int32)
    v2 = np.empty(cnt, dtype=np.int32)
    w2 = np.empty(cnt, dtype=np.float64)
    pos = 0
    for a in range(k):
        for b in range(a + 1, k):
            if acc[a, b] != 0.0:
                u2[pos] = a
                v2[pos] = b
                w2[pos] = acc[a, b]
                pos += 1
    return u2, v2, w2, self2
