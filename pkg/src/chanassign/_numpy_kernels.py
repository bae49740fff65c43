"""Pure-numpy counterparts of the compiled kernels (``CHANASSIGN_BACKEND=numpy``)."""
import numpy as np


def count_distribution(probs):
    probs = np.asarray(probs, dtype=np.float64)
    dist = np.zeros(len(probs) + 1)
    dist[0] = 1.0
    for pk in probs:
        dist[1:] = dist[1:] * (1.0 - pk) + dist[:-1] * pk
        dist[0] *= 1.0 - pk
    return dist


def inv_count_mean(probs):
    dist = count_distribution(probs)
    return float(dist @ (1.0 / np.arange(1, len(dist) + 1)))


def contend_probs(p_idle, owner, share_mask):
    M = p_idle.shape[0]
    users = np.arange(M)[:, None]
    is_excl = owner[None, :] == users
    is_com = ((share_mask[None, :] >> users) & 1).astype(bool)
    busy = 1.0 - p_idle
    busy_excl = np.where(is_excl, busy, 1.0).prod(axis=1)
    busy_com = np.where(is_com, busy, 1.0).prod(axis=1)
    return busy_excl * (1.0 - busy_com)


def pick_window(dist, pc_table, eps, w_max):
    pc = pc_table[2 : w_max + 1, 2:] @ dist[2:]
    ok = np.flatnonzero(pc <= eps)
    return int(ok[0]) + 2 if len(ok) else -1


def throughput(p_good, p_idle, owner, share_mask, delta):
    M, N = p_idle.shape
    users = np.arange(M)[:, None]
    is_excl = owner[None, :] == users
    is_com = ((share_mask[None, :] >> users) & 1).astype(bool)
    busy_excl = np.where(is_excl, 1.0 - p_idle, 1.0).prod(axis=1)
    T = np.zeros(M)
    for i in range(M):
        excl = np.flatnonzero(is_excl[i])
        case1 = sum(
            p_good[i, j] * inv_count_mean(p_idle[i, excl[excl != j]]) for j in excl
        )
        case3 = 0.0
        com = np.flatnonzero(is_com[i])
        for j in com:
            theta = busy_excl[i] * p_good[i, j] * inv_count_mean(p_idle[i, com[com != j]])
            if theta == 0.0:
                continue
            others = np.flatnonzero(is_com[:, j])
            others = others[others != i]
            q4 = []
            for m in others:
                com_m = np.flatnonzero(is_com[m])
                q4.append(p_idle[m, j] * busy_excl[m] * inv_count_mean(p_idle[m, com_m[com_m != j]]))
            case3 += theta * inv_count_mean(q4)
        T[i] = case1 + (1.0 - delta) * case3
    return T
