"""Per-chunk cycle simulation: a compiled loop kernel and a vectorised numpy twin.

Both fill the same three arrays for cycles ``cycle0 .. cycle0 + n - 1``:
``credit[n, M]`` (throughput earned per user), ``ncont[n]`` (number of
contenders) and ``first[n]`` (earliest contention event was a collision).
They draw from :mod:`chanassign._rng`, so their outputs are bit-identical.

Credit parameters: ``mode`` 0 pays ``credit_excl`` to a successful direct
transmitter and ``credit_win`` to a successful contention winner. Mode 1
(timed) pays ``1 - t_fix / t_cycle`` and
``1 - (t_fix + b * slot + (k + 1) * handshake) / t_cycle`` respectively,
with ``b`` the winner's backoff and ``k`` the number of earlier contention
events in the cycle.
"""
import numpy as np

from ._backend import jit
from ._rng import INV53, mix_array, mix_u64, uniform_array

BIG = np.int64(1) << np.int64(40)


@jit
def simulate_chunk_kernel(
    p, pd, pf, excl_ch, excl_n, com_ch, com_n, keys, cycle0, n, W,
    mode, credit_excl, credit_win, t_fix, slot, handshake, t_cycle,
):
    M, N = p.shape
    credit = np.zeros((n, M))
    ncont = np.zeros(n, dtype=np.int64)
    first = np.zeros(n, dtype=np.uint8)
    avail = np.zeros((M, N), dtype=np.bool_)
    seen = np.zeros(N, dtype=np.int64)
    backoff = np.zeros(M, dtype=np.int64)
    choice = np.zeros(M, dtype=np.int64)
    active = np.zeros(M, dtype=np.bool_)
    s11 = np.uint64(11)
    for c in range(n):
        g = np.uint64(cycle0 + c)
        b0 = mix_u64(keys[0] ^ g)
        b1 = mix_u64(keys[1] ^ g)
        b2 = mix_u64(keys[2] ^ g)
        b3 = mix_u64(keys[3] ^ g)
        b4 = mix_u64(keys[4] ^ g)
        m = 0
        for i in range(M):
            active[i] = False
            ui = np.uint64(i) << np.uint64(16)
            # exclusive channels first
            k = 0
            for t in range(excl_n[i]):
                j = excl_ch[i, t]
                idx = ui | np.uint64(j)
                a = float(mix_u64(b0 ^ idx) >> s11) * INV53 < p[i, j]
                avail[i, j] = a
                thr = pf[i, j] if a else pd[i, j]
                if float(mix_u64(b1 ^ idx) >> s11) * INV53 >= thr:
                    seen[k] = j
                    k += 1
            kc = 0
            # shared channels are sensed every cycle as well
            for t in range(com_n[i]):
                j = com_ch[i, t]
                idx = ui | np.uint64(j)
                a = float(mix_u64(b0 ^ idx) >> s11) * INV53 < p[i, j]
                avail[i, j] = a
                thr = pf[i, j] if a else pd[i, j]
                if float(mix_u64(b1 ^ idx) >> s11) * INV53 >= thr:
                    if k == 0:
                        seen[kc] = j
                    kc += 1
            if k > 0:
                r = int(float(mix_u64(b2 ^ ui) >> s11) * INV53 * k)
                j = seen[r]
                if avail[i, j]:
                    if mode == 0:
                        credit[c, i] = credit_excl
                    else:
                        credit[c, i] = 1.0 - t_fix / t_cycle
            elif kc > 0:
                r = int(float(mix_u64(b3 ^ ui) >> s11) * INV53 * kc)
                choice[i] = seen[r]
                backoff[i] = int(float(mix_u64(b4 ^ ui) >> s11) * INV53 * W)
                active[i] = True
                m += 1
        ncont[c] = m
        events = 0
        left = m
        while left > 0:
            bmin = BIG
            for i in range(M):
                if active[i] and backoff[i] < bmin:
                    bmin = backoff[i]
            cnt = 0
            w = -1
            for i in range(M):
                if active[i] and backoff[i] == bmin:
                    cnt += 1
                    w = i
            if cnt >= 2:
                if events == 0:
                    first[c] = 1
                for i in range(M):
                    if active[i] and backoff[i] == bmin:
                        active[i] = False
                        left -= 1
            else:
                j = choice[w]
                if avail[w, j]:
                    if mode == 0:
                        credit[c, w] = credit_win
                    else:
                        credit[c, w] = 1.0 - (t_fix + bmin * slot + (events + 1) * handshake) / t_cycle
                for i in range(M):
                    if active[i] and choice[i] == j:
                        active[i] = False
                        left -= 1
            events += 1
    return credit, ncont, first


def _pick(mask, u):
    """Index of the floor(u*k)-th set entry along the last axis (k = entries set)."""
    k = mask.sum(-1)
    r = (u * k).astype(np.int64)
    hit = mask & (np.cumsum(mask, -1) == (r + 1)[..., None])
    return hit.argmax(-1), k


def simulate_chunk_numpy(
    p, pd, pf, excl_ch, excl_n, com_ch, com_n, keys, cycle0, n, W,
    mode, credit_excl, credit_win, t_fix, slot, handshake, t_cycle,
):
    M, N = p.shape
    is_ex = np.zeros((M, N), dtype=bool)
    is_com = np.zeros((M, N), dtype=bool)
    for i in range(M):
        is_ex[i, excl_ch[i, : excl_n[i]]] = True
        is_com[i, com_ch[i, : com_n[i]]] = True
    g = np.arange(cycle0, cycle0 + n, dtype=np.uint64)
    base = [mix_array(keys[s] ^ g) for s in range(5)]
    ui = np.arange(M, dtype=np.uint64) << np.uint64(16)
    idx = ui[:, None] | np.arange(N, dtype=np.uint64)[None, :]
    avail = uniform_array(mix_array(base[0][:, None, None] ^ idx[None])) < p
    thr = np.where(avail, pf, pd)
    sensed = uniform_array(mix_array(base[1][:, None, None] ^ idx[None])) >= thr
    sensed &= is_ex | is_com
    avail &= is_ex | is_com
    rows = np.arange(n)[:, None]
    users = np.arange(M)[None, :]

    ex_pick, k = _pick(sensed & is_ex, uniform_array(mix_array(base[2][:, None] ^ ui[None])))
    credit = np.zeros((n, M))
    ok = (k > 0) & avail[rows, users, ex_pick]
    credit[ok] = credit_excl if mode == 0 else 1.0 - t_fix / t_cycle

    choice, kc = _pick(sensed & is_com, uniform_array(mix_array(base[3][:, None] ^ ui[None])))
    active = (k == 0) & (kc > 0)
    backoff = (uniform_array(mix_array(base[4][:, None] ^ ui[None])) * W).astype(np.int64)
    ncont = active.sum(1).astype(np.int64)
    first = np.zeros(n, dtype=np.uint8)
    events = np.zeros(n, dtype=np.int64)
    r1 = np.arange(n)
    for _ in range(M):
        if not active.any():
            break
        bb = np.where(active, backoff, BIG)
        bmin = bb.min(1)
        at = active & (backoff == bmin[:, None])
        cnt = at.sum(1)
        first[(cnt >= 2) & (events == 0)] = 1
        win = cnt == 1
        w = at.argmax(1)
        jw = choice[r1, w]
        good = win & avail[r1, w, jw]
        if mode == 0:
            pay = np.full(n, credit_win)
        else:
            pay = 1.0 - (t_fix + bmin * slot + (events + 1) * handshake) / t_cycle
        credit[r1[good], w[good]] = pay[good]
        active &= ~at
        active &= ~(win[:, None] & (choice == jw[:, None]))
        events += cnt > 0
    return credit, ncont, first
