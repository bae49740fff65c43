"""Greedy channel assignment (sum-throughput and max-min), brute force, round robin.

Ties are broken deterministically everywhere: lowest user index first, then
lowest channel index.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from . import _kernels, _numpy_kernels
from ._backend import numba_enabled
from .analytics import (
    WindowCapExceeded,
    collision_table,
    estimate_overlap_gain,
    mac_overhead,
    marginal_gain_nonoverlap,
    network_throughput,
    select_window,
    user_throughput_nonoverlap,
)
from .model import Assignment, AvailabilityModel, MacTiming

TIE_TOL = 1e-12


class ObjectiveKind(enum.Enum):
    SUM_THROUGHPUT = "sum"
    MAX_MIN = "maxmin"


class BruteForceCapExceeded(ValueError):
    pass


@dataclass(frozen=True)
class GreedyConfig:
    eps: float = 1e-3
    eps_delta: float = 5e-3
    tie_break: str = "lowest-index"
    # Extension, off by default: drop a grant (and never retry it at this h)
    # when the exact analytic network total would go down.
    guard: bool = False

    def __post_init__(self):
        if self.eps <= 0 or self.eps_delta <= 0:
            raise ValueError("eps and eps_delta must be > 0")
        if self.tie_break != "lowest-index":
            raise ValueError(f"unknown tie-break rule {self.tie_break!r}")


@dataclass
class OverlapResult:
    assignment: Assignment
    window: int
    delta: float
    grants: list = field(default_factory=list)  # (h, user, channel) per committed grant
    evaluations: dict = field(default_factory=dict)  # h -> candidate evaluations per pass

    def __iter__(self):
        return iter((self.assignment, self.window, self.delta))


@dataclass
class FairResult:
    assignment: Assignment
    min_history: list  # min throughput after algorithm 3 and after every commit


@dataclass
class BruteForceResult:
    assignment: Assignment
    value: float
    objective: ObjectiveKind
    infeasible: int = 0


# -- non-overlapping -------------------------------------------------------


def algorithm1(model: AvailabilityModel, trace=None) -> Assignment:
    """Greedy non-overlapping assignment maximising the throughput increase."""
    p = model.p
    M, N = p.shape
    pool = list(range(N))
    sets = [[] for _ in range(M)]
    while pool:
        gains = np.empty(M)
        picks = []
        for i in range(M):
            j = max(pool, key=lambda c: (p[i, c], -c))
            picks.append(j)
            gains[i] = marginal_gain_nonoverlap(model, sets[i], i, j) if sets[i] else p[i, j]
        i = int(np.argmax(gains))
        sets[i].append(picks[i])
        pool.remove(picks[i])
        if trace is not None:
            trace.append((i, picks[i], float(gains[i])))
    return Assignment.non_overlapping(sets, N)


def algorithm3_fair(model: AvailabilityModel, trace=None) -> Assignment:
    """Greedy non-overlapping assignment serving the weakest users first."""
    p = model.p
    M, N = p.shape
    pool = list(range(N))
    sets = [[] for _ in range(M)]
    T = [0.0] * M
    while pool:
        t_min = min(T)
        weakest = [i for i in range(M) if T[i] - t_min <= TIE_TOL]
        best = None
        for i in weakest:
            for j in pool:
                g = marginal_gain_nonoverlap(model, sets[i], i, j)
                if best is None or g > best[0]:
                    best = (g, i, j)
        _, i, j = best
        sets[i].append(j)
        pool.remove(j)
        T[i] = user_throughput_nonoverlap(model, sets[i], i)
        if trace is not None:
            trace.append((i, j, best[0]))
    return Assignment.non_overlapping(sets, N)


# -- overlapping, sum objective -------------------------------------------


def _grant(assignment: Assignment, user, channel) -> Assignment:
    """Add ``user`` as a sharer of ``channel``; an exclusive owner becomes a sharer."""
    excl = [list(s) for s in assignment.exclusive]
    shar = [list(s) for s in assignment.shared]
    for i in assignment.holders(channel):
        if channel in excl[i]:
            excl[i].remove(channel)
            shar[i].append(channel)
    shar[user].append(channel)
    return Assignment(assignment.num_channels, tuple(excl), tuple(shar))


def _total(model, assignment, timing):
    return network_throughput(model, assignment, timing).total


def _overhead(model, assignment, timing):
    W = select_window(model, assignment, timing)
    return W, mac_overhead(timing, W)


def algorithm2(model: AvailabilityModel, timing: MacTiming, config: GreedyConfig | None = None) -> OverlapResult:
    """Two-phase overlapping assignment.

    Phase 1 is :func:`algorithm1`. Phase 2 walks h = 1..M-1 and, within each
    h, repeatedly grants the (channel in G_h, user) pair with the largest
    estimated gain until no estimate exceeds ``config.eps``. A grant that
    moves the overhead by more than ``eps_delta`` is re-evaluated once with
    the updated overhead before it is committed.
    """
    config = config or GreedyConfig()
    M = model.num_users
    cur = algorithm1(model)
    _, delta0 = _overhead(model, cur, timing)
    result = OverlapResult(cur, 0, 0.0)
    for h in range(1, M):
        result.evaluations[h] = []
        reestimated = False
        rejected = set()
        while True:
            best = None
            evals = 0
            for j in cur.views.groups.get(h, ()):
                holders = cur.holders(j)
                if h == 1 and len(cur.exclusive[holders[0]]) < 2:
                    continue  # every user keeps at least one exclusive channel
                for l in range(M):
                    if l in holders or (l, j) in rejected:
                        continue
                    g = estimate_overlap_gain(model, cur, l, j, holders, delta0)
                    evals += 1
                    if best is None or g > best[0] or (g == best[0] and (l, j) < (best[1], best[2])):
                        best = (g, l, j)
            result.evaluations[h].append(evals)
            if best is None or best[0] <= config.eps:
                break
            _, l, j = best
            tentative = _grant(cur, l, j)
            _, delta = _overhead(model, tentative, timing)
            if abs(delta - delta0) > config.eps_delta and not reestimated:
                delta0 = delta
                reestimated = True
                continue
            if config.guard and _total(model, tentative, timing) < _total(model, cur, timing):
                rejected.add((l, j))
                reestimated = False
                continue
            cur = tentative
            delta0 = delta
            reestimated = False
            result.grants.append((h, l, j))
        _, delta0 = _overhead(model, cur, timing)
    result.assignment = cur
    result.window, result.delta = _overhead(model, cur, timing)
    return result


# -- overlapping, max-min objective ---------------------------------------


def _evaluate(model, assignment, timing):
    try:
        return network_throughput(model, assignment, timing).per_user
    except WindowCapExceeded:
        return None


def search_potential(model, assignment: Assignment, user, t_min, timing: MacTiming):
    """Best sharing move that lifts the network minimum above ``t_min``.

    Scans other users' exclusive channels (converted to shared with the
    owner, ``user`` and l extra users drawn from the remaining M-2) and then
    shared channels ``user`` does not hold (joined with l extra users).
    Returns the best candidate assignment or ``None``.
    """
    M = model.num_users
    best, threshold = None, t_min
    sep = sorted(j for i in range(M) if i != user for j in assignment.exclusive[i])
    for j in sep:
        owner = assignment.owner(j)
        extra_pool = [m for m in range(M) if m not in (user, owner)]
        for l in range(len(extra_pool) + 1):
            for extra in combinations(extra_pool, l):
                cand = _grant(assignment, user, j)
                for m in extra:
                    cand = _grant(cand, m, j)
                T = _evaluate(model, cand, timing)
                if T is not None and T.min() > threshold:
                    best, threshold = cand, float(T.min())
    uni = sorted(set(j for i in range(M) for j in assignment.shared[i]) - set(assignment.shared[user]))
    for j in uni:
        in_use = assignment.holders(j)
        extra_pool = [m for m in range(M) if m != user and m not in in_use]
        for l in range(len(extra_pool) + 1):
            for extra in combinations(extra_pool, l):
                cand = _grant(assignment, user, j)
                for m in extra:
                    cand = _grant(cand, m, j)
                T = _evaluate(model, cand, timing)
                if T is not None and T.min() > threshold:
                    best, threshold = cand, float(T.min())
    return best


def algorithm4_fair(model: AvailabilityModel, timing: MacTiming, config: GreedyConfig | None = None) -> FairResult:
    """Max-min overlapping assignment: algorithm 3, then sharing moves for the weakest user."""
    cur = algorithm3_fair(model)
    T = network_throughput(model, cur, timing).per_user
    history = [float(T.min())]
    while True:
        user = int(np.argmin(T))
        cand = search_potential(model, cur, user, float(T[user]), timing)
        if cand is None:
            break
        cur = cand
        T = network_throughput(model, cur, timing).per_user
        history.append(float(T.min()))
    return FairResult(cur, history)


# -- baselines ---------------------------------------------------------------


def round_robin(model: AvailabilityModel, k_share=1) -> Assignment:
    """Availability-blind layout: channels dealt to users cyclically, ``k_share`` per channel."""
    if k_share < 1:
        raise ValueError("k_share must be >= 1")
    M, N = model.num_users, model.num_channels
    k = min(k_share, M)
    holders, ptr = [], 0
    for _ in range(N):
        holders.append([(ptr + t) % M for t in range(k)])
        ptr = (ptr + k) % M
    return Assignment.from_holders(holders, M)


def _decode(index, M, N):
    full = (1 << M) - 1
    holders = []
    for j in range(N):
        h = (index >> (j * M)) & full
        holders.append([u for u in range(M) if (h >> u) & 1])
    return Assignment.from_holders(holders, M)


def _brute_force_numpy(p, table, timing):
    M, N = p.shape
    full = (1 << M) - 1
    slope = timing.slot / 2.0 / timing.t_cycle
    base = timing.fixed_overhead / timing.t_cycle
    best = [(-1, -1.0), (-1, -1.0)]
    infeasible = 0
    for c in range(1 << (M * N)):
        h = (c >> (np.arange(N) * M)) & full
        single = (h & (h - 1)) == 0
        owner = np.where((h != 0) & single, np.log2(np.maximum(h, 1)).astype(np.int64), -1)
        mask = np.where(single, 0, h).astype(np.int64)
        dist = _numpy_kernels.count_distribution(_numpy_kernels.contend_probs(p, owner, mask))
        W = _numpy_kernels.pick_window(dist, table, timing.eps_p, timing.w_max)
        if W < 0:
            infeasible += 1
            continue
        T = _numpy_kernels.throughput(p, p, owner, mask, slope * (W - 1) + base)
        for k, v in enumerate((T.sum(), T.min())):
            if v > best[k][1]:
                best[k] = (c, float(v))
    return best[0][0], best[0][1], best[1][0], best[1][1], infeasible


def brute_force_all(model: AvailabilityModel, timing: MacTiming, cap=18):
    """Exhaustive search over all 2^(M*N) holder matrices, both objectives.

    Every candidate gets its own window and overhead. Returns a dict keyed by
    :class:`ObjectiveKind`.
    """
    p = np.ascontiguousarray(model.p)
    M, N = p.shape
    if M * N > cap:
        raise BruteForceCapExceeded(f"brute force needs M*N <= {cap}, got {M * N}")
    table = np.ascontiguousarray(collision_table(M, timing.w_max, timing.collision_model))
    if numba_enabled():
        out = _kernels.brute_force_kernel(
            p, table, timing.eps_p, timing.w_max, timing.slot / 2.0 / timing.t_cycle, timing.fixed_overhead / timing.t_cycle
        )
    else:
        out = _brute_force_numpy(p, table, timing)
    i_sum, v_sum, i_min, v_min, infeasible = out
    if i_sum < 0:
        raise WindowCapExceeded("window cap exceeded for every candidate assignment")
    return {
        ObjectiveKind.SUM_THROUGHPUT: BruteForceResult(_decode(i_sum, M, N), v_sum, ObjectiveKind.SUM_THROUGHPUT, infeasible),
        ObjectiveKind.MAX_MIN: BruteForceResult(_decode(i_min, M, N), v_min, ObjectiveKind.MAX_MIN, infeasible),
    }


def brute_force_optimal(model, timing, objective=ObjectiveKind.SUM_THROUGHPUT, cap=18) -> BruteForceResult:
    return brute_force_all(model, timing, cap)[ObjectiveKind(objective)]
