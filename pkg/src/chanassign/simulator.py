"""Cycle-level Monte Carlo simulation of the synchronised multichannel MAC.

Each cycle: sample availability, sense, transmit directly on a sensed-idle
exclusive channel if there is one, otherwise contend on the control channel
for a sensed-idle shared channel with a uniform backoff in [0, W-1].
Backoffs are processed in ascending order. Two or more users on the same
value collide and drop out while larger backoffs carry on. A lone user
claims its channel and everyone else who picked that channel drops out.
Only truly idle channels pay.

Overhead accounting:

* ``ANALYTIC``: a contention winner earns ``1 - delta(W)``; a direct
  transmitter earns 1 (or ``1 - delta`` with ``exclusive_overhead=True``),
  which is what the analytic throughput model assumes.
* ``TIMED``: an extension with no counterpart in the analytic model.
  Credits are the fraction of the cycle left after sensing and sync, the
  winner's backoff slots and one RTS/CTS exchange for every contention
  event up to and including its own.
"""
from __future__ import annotations

import enum
import io
import csv
from dataclasses import dataclass, field

import numpy as np

from . import _rng
from ._backend import backend_name, numba_enabled
from ._simkernels import simulate_chunk_kernel, simulate_chunk_numpy
from .analytics import mac_overhead, select_window
from .model import Assignment, AvailabilityModel, MacTiming, SensingModel, validate_scenario

CHUNK = 1 << 16


class OverheadMode(enum.Enum):
    ANALYTIC = "analytic"
    TIMED = "timed"


@dataclass(frozen=True)
class SimConfig:
    cycles: int = 100_000
    seed: int = 0
    overhead_mode: OverheadMode = OverheadMode.ANALYTIC
    sensing: SensingModel | None = None
    exclusive_overhead: bool = False

    def __post_init__(self):
        if int(self.cycles) != self.cycles or self.cycles < 1:
            raise ValueError("cycles must be a positive integer")
        object.__setattr__(self, "overhead_mode", OverheadMode(self.overhead_mode))


@dataclass
class SimReport:
    per_user: np.ndarray
    per_user_se: np.ndarray
    total: float
    total_se: float
    first_collision_rate: float
    first_collision_se: float
    histogram: np.ndarray  # cycles with m contenders, m = 0..M
    cycles: int
    seed: int
    window: int
    delta: float
    mode: str
    backend: str = field(default="", compare=False)

    def histogram_se(self) -> np.ndarray:
        f = self.histogram / self.cycles
        return np.sqrt(f * (1.0 - f) / self.cycles)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["user", "throughput", "se", "window", "delta", "mode", "cycles", "seed"])
        for i, (t, s) in enumerate(zip(self.per_user, self.per_user_se)):
            w.writerow([i + 1, repr(float(t)), repr(float(s)), self.window, repr(self.delta), self.mode, self.cycles, self.seed])
        w.writerow(["total", repr(self.total), repr(self.total_se), self.window, repr(self.delta), self.mode, self.cycles, self.seed])
        return buf.getvalue()

    def summary_line(self) -> str:
        users = ",".join(f"{t:.6f}" for t in self.per_user)
        hist = ",".join(str(int(h)) for h in self.histogram)
        line = (
            f"sim mode={self.mode} cycles={self.cycles} seed={self.seed} W={self.window} "
            f"delta={self.delta:.6f} total={self.total:.6f} se={self.total_se:.6f} "
            f"pc={self.first_collision_rate:.6f} pc_se={self.first_collision_se:.6f} "
            f"users={users} hist={hist}"
        )
        if self.mode == OverheadMode.TIMED.value:
            line += " semantics=non-paper-timed"
        return line


@dataclass
class CycleOutcome:
    credit: np.ndarray
    contenders: int
    first_collision: bool
    winners: list  # (user, channel, success) in claim order
    backoffs: dict  # contender -> (backoff, chosen channel)


def _credits(mode, timing, delta, exclusive_overhead):
    if mode is OverheadMode.ANALYTIC:
        return 0, (1.0 - delta) if exclusive_overhead else 1.0, 1.0 - delta
    return 1, 0.0, 0.0


def _sensing_arrays(model, sensing):
    if sensing is None:
        return np.ones_like(model.p), np.zeros_like(model.p)
    validate_scenario(model, sensing=sensing)
    return np.ascontiguousarray(sensing.pd), np.ascontiguousarray(sensing.pf)


def simulate_cycle(
    model: AvailabilityModel,
    assignment: Assignment,
    W: int,
    delta: float,
    sensing: SensingModel | None = None,
    seed: int = 0,
    cycle: int = 0,
    timing: MacTiming | None = None,
    mode=OverheadMode.ANALYTIC,
    exclusive_overhead: bool = False,
) -> CycleOutcome:
    """One cycle in plain Python; the reference for both chunk kernels."""
    mode = OverheadMode(mode)
    timing = timing or MacTiming()
    p = model.p
    pd, pf = _sensing_arrays(model, sensing)
    M = model.num_users
    keys = [int(k) for k in _rng.stream_keys(seed)]
    base = [_rng.mix_int(k ^ cycle) for k in keys]

    def u(stream, i, j=0):
        return _rng.uniform_int(_rng.mix_int(base[stream] ^ ((i << 16) | j)))

    _, credit_excl, credit_win = _credits(mode, timing, delta, exclusive_overhead)
    t_fix = timing.t_sen + timing.t_syn
    credit = np.zeros(M)
    avail, contenders = {}, {}
    for i in range(M):
        seen_ex, seen_com = [], []
        for j in assignment.exclusive[i] + assignment.shared[i]:
            a = u(_rng.STREAM_AVAIL, i, j) < p[i, j]
            avail[i, j] = a
            if u(_rng.STREAM_SENSE, i, j) >= (pf[i, j] if a else pd[i, j]):
                (seen_ex if j in assignment.exclusive[i] else seen_com).append(j)
        if seen_ex:
            j = seen_ex[int(u(_rng.STREAM_EXCL, i) * len(seen_ex))]
            if avail[i, j]:
                credit[i] = credit_excl if mode is OverheadMode.ANALYTIC else 1.0 - t_fix / timing.t_cycle
        elif seen_com:
            j = seen_com[int(u(_rng.STREAM_SHARED, i) * len(seen_com))]
            contenders[i] = (int(u(_rng.STREAM_BACKOFF, i) * W), j)
    first, winners, events = False, [], 0
    active = dict(contenders)
    while active:
        bmin = min(b for b, _ in active.values())
        at = [i for i, (b, _) in active.items() if b == bmin]
        if len(at) >= 2:
            first = first or events == 0
            for i in at:
                del active[i]
        else:
            w = at[0]
            j = active[w][1]
            ok = bool(avail[w, j])
            if ok:
                if mode is OverheadMode.ANALYTIC:
                    credit[w] = credit_win
                else:
                    credit[w] = 1.0 - (t_fix + bmin * timing.slot + (events + 1) * timing.handshake) / timing.t_cycle
            winners.append((w, j, ok))
            active = {i: v for i, v in active.items() if v[1] != j}
        events += 1
    return CycleOutcome(credit, len(contenders), first, winners, contenders)


def _channel_lists(sets, M, N):
    ch = np.zeros((M, max(N, 1)), dtype=np.int64)
    cnt = np.zeros(M, dtype=np.int64)
    for i, s in enumerate(sets):
        ch[i, : len(s)] = s
        cnt[i] = len(s)
    return ch, cnt


def simulate(
    model: AvailabilityModel,
    assignment: Assignment,
    timing: MacTiming,
    config: SimConfig,
    window: int | None = None,
) -> SimReport:
    """Run ``config.cycles`` cycles and aggregate per-user and collision statistics.

    The window defaults to :func:`select_window` for the scenario (with the
    sensed-idle probabilities when sensing is imperfect).
    """
    validate_scenario(model, assignment, timing, config.sensing)
    sens = config.sensing if config.sensing is not None and not config.sensing.is_perfect else None
    W = select_window(model, assignment, timing, sens) if window is None else int(window)
    if W < 2:
        raise ValueError("window must be >= 2")
    delta = mac_overhead(timing, W)
    M, N = model.p.shape
    p = np.ascontiguousarray(model.p)
    pd, pf = _sensing_arrays(model, config.sensing)
    excl_ch, excl_n = _channel_lists(assignment.exclusive, M, N)
    com_ch, com_n = _channel_lists(assignment.shared, M, N)
    keys = _rng.stream_keys(config.seed)
    mode_id, credit_excl, credit_win = _credits(config.overhead_mode, timing, delta, config.exclusive_overhead)
    chunk_fn = simulate_chunk_kernel if numba_enabled() else simulate_chunk_numpy

    s1 = np.zeros(M)
    s2 = np.zeros(M)
    t1 = t2 = 0.0
    hist = np.zeros(M + 1, dtype=np.int64)
    collisions = 0
    for start in range(0, config.cycles, CHUNK):
        n = min(CHUNK, config.cycles - start)
        credit, ncont, first = chunk_fn(
            p, pd, pf, excl_ch, excl_n, com_ch, com_n, keys, start, n, W,
            mode_id, credit_excl, credit_win,
            timing.t_sen + timing.t_syn, timing.slot, timing.handshake, timing.t_cycle,
        )
        s1 += credit.sum(0)
        s2 += (credit * credit).sum(0)
        tot = credit.sum(1)
        t1 += tot.sum()
        t2 += (tot * tot).sum()
        hist += np.bincount(ncont, minlength=M + 1)
        collisions += int(first.sum())

    n = config.cycles

    def se(s, ss):
        var = np.maximum(ss / n - (s / n) ** 2, 0.0) * n / max(n - 1, 1)
        return np.sqrt(var / n)

    rate = collisions / n
    return SimReport(
        per_user=s1 / n,
        per_user_se=se(s1, s2),
        total=float(t1 / n),
        total_se=float(se(t1, t2)),
        first_collision_rate=float(rate),
        first_collision_se=float(np.sqrt(rate * (1.0 - rate) / n)),
        histogram=hist,
        cycles=n,
        seed=config.seed,
        window=W,
        delta=delta,
        mode=config.overhead_mode.value,
        backend=backend_name(),
    )


def empirical_collision_prob(model, assignment, timing, windows, config: SimConfig):
    """First-collision rate for each window in ``windows``: list of (W, rate, se).

    All windows reuse the same seed, so the curves share their random numbers.
    """
    out = []
    for W in windows:
        if W < 2:
            raise ValueError("window must be >= 2")
        r = simulate(model, assignment, timing, config, window=W)
        out.append((int(W), r.first_collision_rate, r.first_collision_se))
    return out
