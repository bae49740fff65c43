"""Closed-form throughput, contention and overhead analysis.

Two evaluation routes exist for per-user throughput:

* :func:`user_throughput_perfect` / :func:`user_throughput_imperfect` walk
  the subset families term by term (choice subsets, the four sharer groups,
  sensing outcomes). They are slow but transparent.
* :func:`per_user_throughput` (used by :func:`network_throughput`, the
  greedy algorithms and the brute-force search) evaluates the same
  expectation through Poisson-binomial count laws in a compiled kernel.

The test-suite holds the two routes equal to 1e-12.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations, product
from math import comb, prod

import numpy as np

from . import _kernels, _numpy_kernels
from ._backend import numba_enabled
from .model import Assignment, AvailabilityModel, MacTiming, ScenarioError, SensingModel


class WindowCapExceeded(RuntimeError):
    """No contention window up to ``w_max`` meets the collision target."""


@dataclass(frozen=True)
class ThroughputReport:
    per_user: np.ndarray
    total: float
    delta: float
    window: int
    error_bound: float
    mode: str = "perfect"

    @property
    def min_user(self) -> float:
        return float(np.min(self.per_user))

    def csv_row(self, scenario_id, num_channels):
        return (
            [scenario_id, len(self.per_user), num_channels, self.window, self.delta]
            + [float(t) for t in self.per_user]
            + [self.total, self.error_bound, self.mode]
        )


def report_csv(reports, num_channels, ids=None) -> str:
    """Flat CSV: scenario id, M, N, W, delta, T_1..T_M, total, E_t, mode."""
    reports = list(reports)
    width = max(len(r.per_user) for r in reports)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["scenario", "M", "N", "W", "delta"] + [f"T_{k + 1}" for k in range(width)] + ["total", "E_t", "mode"])
    for k, r in enumerate(reports):
        row = r.csv_row(ids[k] if ids else k, num_channels)
        ts = row[5 : 5 + len(r.per_user)] + [""] * (width - len(r.per_user))
        w.writerow(row[:5] + ts + row[5 + len(r.per_user) :])
    return buf.getvalue()


@dataclass(frozen=True)
class ContentionProfile:
    contend: np.ndarray  # P_con per user
    distribution: np.ndarray  # Pr{m contend}, m = 0..M

    def first_collision(self, W) -> float:
        return float(sum(collision_prob_given_m(W, m) * self.distribution[m] for m in range(2, len(self.distribution))))


# -- non-overlapping throughput -------------------------------------------


def _check_channels(model, channels):
    for j in channels:
        if not 0 <= j < model.num_channels:
            raise IndexError(f"channel {j + 1} outside 1..{model.num_channels}")


def user_throughput_nonoverlap(model: AvailabilityModel, channels, i) -> float:
    """Probability that at least one of ``channels`` is idle for user ``i``."""
    if not 0 <= i < model.num_users:
        raise IndexError(f"user {i + 1} outside 1..{model.num_users}")
    channels = list(channels)
    _check_channels(model, channels)
    return 1.0 - prod(1.0 - model.p[i, j] for j in channels)


def marginal_gain_nonoverlap(model: AvailabilityModel, channels, i, candidate) -> float:
    """Throughput increase of user ``i`` when ``candidate`` joins its exclusive set."""
    channels = list(channels)
    if candidate in channels:
        raise ValueError(f"channel {candidate + 1} already assigned to user {i + 1}")
    _check_channels(model, channels + [candidate])
    return model.p[i, candidate] * prod(1.0 - model.p[i, j] for j in channels)


def estimate_overlap_gain(
    model: AvailabilityModel, assignment: Assignment, i, j, sharers=None, delta=0.0, ms=None
) -> float:
    """Estimated gain of user ``i`` from joining channel ``j``.

    ``sharers`` defaults to the current holders of ``j``; the sets S and
    S^com are taken from ``assignment`` as they stand before the grant.
    ``ms`` overrides the sharer count in the (1 - 1/MS) factors.
    """
    if j in assignment.total(i):
        raise ValueError(f"user {i + 1} already holds channel {j + 1}")
    if sharers is None:
        sharers = assignment.holders(j)
    sharers = list(sharers)
    if not sharers:
        raise ValueError(f"channel {j + 1} has no holders to share with")
    if not 0.0 <= delta <= 1.0:
        raise ValueError("delta must lie in [0, 1]")
    ms = len(sharers) if ms is None else ms
    p, q = model.p, model.q
    excl_busy = prod(q[i, h] for h in assignment.exclusive[i])
    com_busy = prod(q[i, h] for h in assignment.shared[i])
    head = (1.0 - delta) * p[i, j] * excl_busy
    share_factor = 1.0 - 1.0 / ms

    one_busy = sum(
        q[sharers[k], j] * prod(p[s, j] for t, s in enumerate(sharers) if t != k) for k in range(len(sharers))
    )
    all_idle = prod(p[s, j] for s in sharers)
    all_served = prod(1.0 - prod(q[s, h] for h in assignment.exclusive[s]) for s in sharers)

    term5 = share_factor * head * (1.0 - com_busy) * one_busy
    term6 = head * com_busy * all_idle * all_served
    term7 = share_factor * head * (1.0 - com_busy) * all_idle * all_served
    return term5 + term6 + term7


# -- contention -------------------------------------------------------------


def _idle_matrix(model, sensing):
    if sensing is None:
        return model.p
    return sensing.p_idle(model)


def contend_probability(model: AvailabilityModel, assignment: Assignment, i, sensing=None) -> float:
    """Probability that user ``i`` enters contention in a cycle."""
    pi = _idle_matrix(model, sensing)
    excl_busy = prod(1.0 - pi[i, j] for j in assignment.exclusive[i])
    com_busy = prod(1.0 - pi[i, j] for j in assignment.shared[i])
    return excl_busy * (1.0 - com_busy)


def contenders_distribution(model, assignment, sensing=None) -> np.ndarray:
    """Pr{m users contend}, m = 0..M, summed over every m-subset of users."""
    pc = np.array([contend_probability(model, assignment, i, sensing) for i in range(assignment.num_users)])
    M = len(pc)
    masks = np.arange(1 << M)
    inside = ((masks[:, None] >> np.arange(M)) & 1).astype(bool)
    weight = np.where(inside, pc, 1.0 - pc).prod(axis=1)
    return np.bincount(inside.sum(axis=1), weights=weight, minlength=M + 1)


def contention_profile(model, assignment, sensing=None) -> ContentionProfile:
    pc = np.array([contend_probability(model, assignment, i, sensing) for i in range(assignment.num_users)])
    return ContentionProfile(pc, contenders_distribution(model, assignment, sensing))


@lru_cache(maxsize=None)
def _power_sums(W, kmax):
    b = (W - 1 - np.arange(W - 1)) / W  # (W - i - 1) / W, i = 0..W-2
    return np.array([np.sum(b**k) for k in range(kmax + 1)])


def collision_prob_given_m(W, m) -> float:
    """Conditional first-collision probability with ``m`` contenders.

    The inner sum over the shared backoff value i runs to W - 2, so the
    event that every contender draws W - 1 is not counted.
    """
    if W < 2:
        raise ValueError("contention window must be >= 2")
    if m < 2:
        return 0.0
    sums = _power_sums(int(W), int(m))
    a = 1.0 / W
    return float(sum(comb(m, j) * a**j * sums[m - j] for j in range(2, m + 1)))


def collision_prob_exact(W, m) -> float:
    """First-collision probability counting every backoff value 0..W-1.

    Exact: the smallest drawn value is shared by two or more contenders.
    Provided for comparison only; window selection uses
    :func:`collision_prob_given_m`.
    """
    if W < 2:
        raise ValueError("contention window must be >= 2")
    if m < 2:
        return 0.0
    total = 0.0
    for i in range(W):
        above = (W - i) / W  # draw >= i
        strictly = (W - i - 1) / W  # draw > i
        total += above**m - strictly**m - m * (1.0 / W) * strictly ** (m - 1)
    return total


def collision_prob_enumerated(W, m) -> float:
    """Brute-force count over all W**m backoff tuples (small W, m only)."""
    hits = 0
    for draw in product(range(W), repeat=m):
        lo = min(draw)
        hits += draw.count(lo) >= 2
    return hits / W**m


_COLLISION_FNS = {"formula": collision_prob_given_m, "exact": collision_prob_exact}


@lru_cache(maxsize=64)
def collision_table(max_users, w_max, collision_model="formula") -> np.ndarray:
    """``table[W, m]`` = conditional first-collision probability for W <= w_max, m <= max_users."""
    fn = _COLLISION_FNS[collision_model]
    table = np.zeros((w_max + 1, max_users + 1))
    for W in range(2, w_max + 1):
        for m in range(2, max_users + 1):
            table[W, m] = fn(W, m)
    table.setflags(write=False)
    return table


def first_collision_prob(model, assignment, W, sensing=None, collision_model="formula") -> float:
    dist = contenders_distribution(model, assignment, sensing)
    fn = _COLLISION_FNS[collision_model]
    return float(sum(fn(W, m) * dist[m] for m in range(2, len(dist))))


def select_window(model, assignment, timing: MacTiming, sensing=None) -> int:
    """Smallest W in [2, w_max] with first-collision probability <= eps_p."""
    dist = contenders_distribution(model, assignment, sensing)
    return _window_from_distribution(dist, timing)


def _window_from_distribution(dist, timing):
    M = len(dist) - 1
    if M < 2 or dist[2:].sum() == 0.0:
        return 2
    fn = _COLLISION_FNS[timing.collision_model]
    for W in range(2, timing.w_max + 1):
        pc = sum(fn(W, m) * dist[m] for m in range(2, M + 1))
        if pc <= timing.eps_p:
            return W
    raise WindowCapExceeded(
        f"window cap exceeded: no W <= {timing.w_max} reaches collision target {timing.eps_p}"
    )


def mac_overhead(timing: MacTiming, W) -> float:
    """Fraction of a cycle spent on sync, sensing, mean backoff and RTS/CTS."""
    if W < 1:
        raise ValueError("contention window must be >= 1")
    delta = ((W - 1) * timing.slot / 2.0 + timing.fixed_overhead) / timing.t_cycle
    if not 0.0 <= delta < 1.0:
        raise ScenarioError(f"cycle too short: overhead {delta:.4f} >= 1 at W={W}")
    return delta


def analysis_error_bound(model, assignment, eps_p, sensing=None) -> float:
    """Upper bound on the throughput error caused by ignoring collisions."""
    return eps_p * sum(contend_probability(model, assignment, i, sensing) for i in range(assignment.num_users))


def sensing_access_probs(model, sensing: SensingModel, i, j):
    """(P_idle, P_busy) of user ``i`` on channel ``j``."""
    p = model.p[i, j]
    idle = (1.0 - sensing.pf[i, j]) * p + (1.0 - sensing.pd[i, j]) * (1.0 - p)
    return idle, 1.0 - idle


# -- exact per-user throughput, term by term --------------------------------


def _subsets(items):
    for k in range(len(items) + 1):
        yield from combinations(items, k)


def _group_sum(groups):
    """Sum over ordered partitions of the other sharers into Groups I..IV.

    ``groups[k]`` = (g1, g2, g3, g4) for sharer k; Group IV members compete
    with the tagged user, who then wins with probability 1 / (1 + A4).
    """
    idx = tuple(range(len(groups)))
    total = 0.0
    for a1 in range(len(idx) + 1):
        for om1 in combinations(idx, a1):
            rest1 = tuple(k for k in idx if k not in om1)
            phi1 = prod(groups[k][0] for k in om1)
            for a2 in range(len(rest1) + 1):
                for om2 in combinations(rest1, a2):
                    rest2 = tuple(k for k in rest1 if k not in om2)
                    phi2 = prod(groups[k][1] for k in om2)
                    for a3 in range(len(rest2) + 1):
                        for om3 in combinations(rest2, a3):
                            om4 = tuple(k for k in rest2 if k not in om3)
                            phi3 = prod(groups[k][2] for k in om3)
                            phi4 = prod(groups[k][3] for k in om4) / (1 + len(om4))
                            total += phi1 * phi2 * phi3 * phi4
    return total


def _sharer_groups(idle, busy, assignment, m, j):
    """Group I..IV probabilities of sharer ``m`` with respect to channel ``j``."""
    excl_busy = prod(busy[m, h] for h in assignment.exclusive[m])
    rest = [h for h in assignment.shared[m] if h != j]
    stay, leave = 0.0, 0.0  # picks j / picks another sensed-idle shared channel
    for chosen in _subsets(rest):
        n = len(chosen)
        pr = prod(idle[m, h] for h in chosen) * prod(busy[m, h] for h in rest if h not in chosen)
        stay += pr / (n + 1)
        leave += pr * (1.0 - 1.0 / (n + 1))
    g1 = idle[m, j] * (1.0 - excl_busy)
    g2 = busy[m, j]
    g3 = idle[m, j] * excl_busy * leave
    g4 = idle[m, j] * excl_busy * stay
    return g1, g2, g3, g4


def _contention_share(idle, busy, assignment, i, theta):
    total = 0.0
    for j, th in theta.items():
        if th == 0.0:
            continue
        others = [m for m in assignment.holders(j) if m != i]
        groups = [_sharer_groups(idle, busy, assignment, m, j) for m in others]
        total += th * _group_sum(groups)
    return total


def user_throughput_perfect(model: AvailabilityModel, assignment: Assignment, i, delta) -> float:
    """Exact throughput of user ``i`` with perfect sensing and no collisions."""
    p, q = model.p, model.q
    S, com = assignment.exclusive[i], assignment.shared[i]
    excl_busy = prod(q[i, h] for h in S)
    case1 = 1.0 - excl_busy
    theta = {j: 0.0 for j in com}
    for B in range(1, len(com) + 1):
        for psi in combinations(com, B):
            pr = prod(p[i, h] for h in psi) * prod(q[i, h] for h in com if h not in psi)
            for j in psi:
                theta[j] += excl_busy * pr / B
    return case1 + (1.0 - delta) * _contention_share(p, q, assignment, i, theta)


def user_throughput_imperfect(model, assignment, sensing: SensingModel, i, delta) -> float:
    """Exact throughput of user ``i`` under sensing errors, no collisions.

    Payoff is earned only on channels that are truly idle; a transmission
    on a mis-detected busy channel yields nothing.
    """
    p, q = model.p, model.q
    pf, pd = sensing.pf[i], sensing.pd[i]
    idle = sensing.p_idle(model)
    busy = 1.0 - idle
    S, com = assignment.exclusive[i], assignment.shared[i]

    case1 = 0.0
    for k1 in range(1, len(S) + 1):
        for avail in combinations(S, k1):
            unavail = [h for h in S if h not in avail]
            pr1 = prod(p[i, h] for h in avail) * prod(q[i, h] for h in unavail)
            for k2 in range(1, k1 + 1):
                for seen in combinations(avail, k2):
                    pr2 = prod(1.0 - pf[h] for h in seen) * prod(pf[h] for h in avail if h not in seen)
                    for k3 in range(len(unavail) + 1):
                        for missed in combinations(unavail, k3):
                            pr3 = prod(1.0 - pd[h] for h in missed) * prod(pd[h] for h in unavail if h not in missed)
                            case1 += pr1 * pr2 * pr3 * k2 / (k2 + k3)

    # every exclusive channel sensed busy: idle ones false-alarmed, busy ones detected
    excl_quiet = 0.0
    for k1 in range(len(S) + 1):
        for avail in combinations(S, k1):
            excl_quiet += prod(pf[h] * p[i, h] for h in avail) * prod(
                pd[h] * q[i, h] for h in S if h not in avail
            )

    theta = {j: 0.0 for j in com}
    for k2 in range(1, len(com) + 1):
        for psi in combinations(com, k2):
            rest = [h for h in com if h not in psi]
            pr_avail = prod(p[i, h] for h in psi) * prod(q[i, h] for h in rest)
            for k3 in range(1, k2 + 1):
                for seen in combinations(psi, k3):
                    pr_seen = prod(1.0 - pf[h] for h in seen) * prod(pf[h] for h in psi if h not in seen)
                    for k4 in range(len(rest) + 1):
                        for missed in combinations(rest, k4):
                            pr_missed = prod(1.0 - pd[h] for h in missed) * prod(
                                pd[h] for h in rest if h not in missed
                            )
                            w = excl_quiet * pr_avail * pr_seen * pr_missed / (k3 + k4)
                            for j in seen:
                                theta[j] += w
    return case1 + (1.0 - delta) * _contention_share(idle, busy, assignment, i, theta)


# -- network level (kernel route) -------------------------------------------


def per_user_throughput(model, assignment, delta, sensing=None) -> np.ndarray:
    """Per-user throughput for all users via the compiled/numpy kernel."""
    owner, mask = assignment.to_arrays()
    if sensing is None:
        good = idle = model.p
    else:
        good, idle = sensing.p_good(model), sensing.p_idle(model)
    if numba_enabled():
        return _kernels.throughput_kernel(good, idle, owner, mask, float(delta))
    return _numpy_kernels.throughput(good, idle, owner, mask, float(delta))


def network_throughput(model, assignment, timing: MacTiming, sensing=None) -> ThroughputReport:
    """Window, overhead, per-user and total throughput, and the error bound."""
    imperfect = sensing is not None and not sensing.is_perfect
    sens = sensing if imperfect else None
    W = select_window(model, assignment, timing, sens)
    delta = mac_overhead(timing, W)
    T = per_user_throughput(model, assignment, delta, sens)
    return ThroughputReport(
        per_user=T,
        total=float(T.sum()),
        delta=delta,
        window=W,
        error_bound=analysis_error_bound(model, assignment, timing.eps_p, sens),
        mode="imperfect" if imperfect else "perfect",
    )
