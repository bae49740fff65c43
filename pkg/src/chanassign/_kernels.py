"""Loop-style numeric kernels compiled with numba when it is enabled.

Each kernel is plain Python over numpy arrays so the same source runs
uncompiled; the dispatching modules pick numba or a vectorised numpy
counterpart according to :func:`chanassign._backend.numba_enabled`.

Assignments are passed as ``owner`` (exclusive holder per channel, -1 if
none) and ``share_mask`` (bitmask of sharers per shared channel).
"""
import numpy as np

from ._backend import jit


@jit
def inv_count_mean(probs, n):
    """E[1 / (1 + X)] for X a Poisson-binomial count over ``probs[:n]``."""
    dist = np.zeros(n + 1)
    dist[0] = 1.0
    for k in range(n):
        pk = probs[k]
        for c in range(k + 1, 0, -1):
            dist[c] = dist[c] * (1.0 - pk) + dist[c - 1] * pk
        dist[0] *= 1.0 - pk
    s = 0.0
    for c in range(n + 1):
        s += dist[c] / (c + 1.0)
    return s


@jit
def sensed_busy_exclusive(p_idle, owner):
    """Per-user probability that every exclusive channel is sensed busy."""
    M = p_idle.shape[0]
    out = np.ones(M)
    for j in range(owner.shape[0]):
        u = owner[j]
        if u >= 0:
            out[u] *= 1.0 - p_idle[u, j]
    return out


@jit
def contend_probs(p_idle, owner, share_mask):
    M, N = p_idle.shape
    busy_excl = sensed_busy_exclusive(p_idle, owner)
    busy_com = np.ones(M)
    for j in range(N):
        mask = share_mask[j]
        if mask == 0:
            continue
        for u in range(M):
            if (mask >> u) & 1:
                busy_com[u] *= 1.0 - p_idle[u, j]
    out = np.empty(M)
    for u in range(M):
        out[u] = busy_excl[u] * (1.0 - busy_com[u])
    return out


@jit
def count_distribution(probs):
    """Pr{m of the independent events occur}, m = 0..len(probs)."""
    n = probs.shape[0]
    dist = np.zeros(n + 1)
    dist[0] = 1.0
    for k in range(n):
        pk = probs[k]
        for c in range(k + 1, 0, -1):
            dist[c] = dist[c] * (1.0 - pk) + dist[c - 1] * pk
        dist[0] *= 1.0 - pk
    return dist


@jit
def pick_window(dist, pc_table, eps, w_max):
    """Smallest W in [2, w_max] whose first-collision probability is <= eps.

    ``pc_table[W, m]`` holds the conditional first-collision probability.
    Returns -1 when no such W exists.
    """
    M = dist.shape[0] - 1
    for W in range(2, w_max + 1):
        s = 0.0
        for m in range(2, M + 1):
            s += pc_table[W, m] * dist[m]
        if s <= eps:
            return W
    return -1


@jit
def throughput_kernel(p_good, p_idle, owner, share_mask, delta):
    """Per-user throughput under no-collision contention.

    ``p_good`` is Pr{idle and sensed idle}, ``p_idle`` is Pr{sensed idle};
    with perfect sensing both equal p. The Group I-III sums collapse to the
    law of the Group IV count, so each shared channel costs O(M^2 + N^2).
    """
    M, N = p_idle.shape
    busy_excl = sensed_busy_exclusive(p_idle, owner)
    T = np.zeros(M)
    buf = np.empty(max(M, N))
    for i in range(M):
        # exclusive channels: pick uniformly among those sensed idle
        case1 = 0.0
        for j in range(N):
            if owner[j] != i:
                continue
            n = 0
            for h in range(N):
                if h != j and owner[h] == i:
                    buf[n] = p_idle[i, h]
                    n += 1
            case1 += p_good[i, j] * inv_count_mean(buf, n)
        case3 = 0.0
        if busy_excl[i] > 0.0:
            for j in range(N):
                if not (share_mask[j] >> i) & 1:
                    continue
                n = 0
                for h in range(N):
                    if h != j and (share_mask[h] >> i) & 1:
                        buf[n] = p_idle[i, h]
                        n += 1
                theta = busy_excl[i] * p_good[i, j] * inv_count_mean(buf, n)
                if theta == 0.0:
                    continue
                # Group IV weights of the other sharers
                q4 = np.empty(M)
                k = 0
                for m in range(M):
                    if m == i or not (share_mask[j] >> m) & 1:
                        continue
                    n = 0
                    for h in range(N):
                        if h != j and (share_mask[h] >> m) & 1:
                            buf[n] = p_idle[m, h]
                            n += 1
                    q4[k] = p_idle[m, j] * busy_excl[m] * inv_count_mean(buf, n)
                    k += 1
                case3 += theta * inv_count_mean(q4, k)
        T[i] = case1 + (1.0 - delta) * case3
    return T


@jit
def brute_force_kernel(p, pc_table, eps, w_max, delta_slope, delta_base):
    """Score every holder-set configuration of an M x N instance.

    Channel j's holder mask is bits [j*M, (j+1)*M) of the configuration
    index. delta(W) = delta_slope * (W - 1) + delta_base. Returns
    (best_sum_index, best_sum, best_min_index, best_min, infeasible_count);
    ties keep the lowest index.
    """
    M, N = p.shape
    full = (1 << M) - 1
    total_configs = 1 << (M * N)
    owner = np.empty(N, dtype=np.int64)
    mask = np.empty(N, dtype=np.int64)
    best_sum = -1.0
    best_sum_idx = -1
    best_min = -1.0
    best_min_idx = -1
    infeasible = 0
    for c in range(total_configs):
        for j in range(N):
            h = (c >> (j * M)) & full
            owner[j] = -1
            mask[j] = 0
            if h != 0:
                if h & (h - 1) == 0:
                    u = 0
                    while (h >> u) != 1:
                        u += 1
                    owner[j] = u
                else:
                    mask[j] = h
        pcon = contend_probs(p, owner, mask)
        dist = count_distribution(pcon)
        W = pick_window(dist, pc_table, eps, w_max)
        if W < 0:
            infeasible += 1
            continue
        delta = delta_slope * (W - 1) + delta_base
        T = throughput_kernel(p, p, owner, mask, delta)
        s = 0.0
        mn = 2.0
        for u in range(M):
            s += T[u]
            if T[u] < mn:
                mn = T[u]
        if s > best_sum:
            best_sum = s
            best_sum_idx = c
        if mn > best_min:
            best_min = mn
            best_min_idx = c
    return best_sum_idx, best_sum, best_min_idx, best_min, infeasible
