"""Scenario data model: availability, channel assignment, MAC timing, sensing.

Users and channels are 0-based in code. Everything that faces a person
(error messages, scenario files, CSV) is 1-based.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class ScenarioError(ValueError):
    """An invariant of the scenario data model is violated."""


def _prob_matrix(name, arr, shape=None):
    a = np.array(arr, dtype=np.float64)
    if a.ndim != 2:
        raise ScenarioError(f"{name}: expected a 2-D matrix, got {a.ndim} dimension(s)")
    if shape is not None and a.shape != shape:
        raise ScenarioError(
            f"{name}: dimension mismatch, expected {shape[0]}x{shape[1]}, got {a.shape[0]}x{a.shape[1]}"
        )
    bad = np.argwhere(~((a >= 0.0) & (a <= 1.0)))
    if len(bad):
        i, j = bad[0]
        raise ScenarioError(f"{name}: probability out of range at ({i + 1},{j + 1}): {a[i, j]!r}")
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class AvailabilityModel:
    """Per-(user, channel) probability that the channel is idle in a cycle."""

    p: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "p", _prob_matrix("p", self.p))
        if self.p.shape[0] < 1 or self.p.shape[1] < 1:
            raise ScenarioError("p: need at least one user and one channel")

    @property
    def num_users(self) -> int:
        return self.p.shape[0]

    @property
    def num_channels(self) -> int:
        return self.p.shape[1]

    @property
    def q(self) -> np.ndarray:
        """Busy probabilities 1 - p."""
        return 1.0 - self.p

    def __eq__(self, other):
        return isinstance(other, AvailabilityModel) and np.array_equal(self.p, other.p)

    __hash__ = None


@dataclass(frozen=True)
class Assignment:
    """Exclusive sets S_i and shared sets S_i^com for every user.

    Sets are stored as sorted tuples. Construction validates every structural
    invariant, so an existing instance is always well formed.
    """

    num_channels: int
    exclusive: tuple
    shared: tuple

    def __post_init__(self):
        excl = tuple(tuple(sorted(set(int(c) for c in s))) for s in self.exclusive)
        shar = tuple(tuple(sorted(set(int(c) for c in s))) for s in self.shared)
        object.__setattr__(self, "exclusive", excl)
        object.__setattr__(self, "shared", shar)
        self._check()

    def _check(self):
        n = self.num_channels
        if len(self.exclusive) != len(self.shared):
            raise ScenarioError(
                f"assignment: {len(self.exclusive)} exclusive sets but {len(self.shared)} shared sets"
            )
        if len(self.exclusive) < 1:
            raise ScenarioError("assignment: needs at least one user")
        for i, (s, c) in enumerate(zip(self.exclusive, self.shared)):
            for j in s + c:
                if not 0 <= j < n:
                    raise ScenarioError(f"assignment: channel {j + 1} of user {i + 1} outside 1..{n}")
            both = set(s) & set(c)
            if both:
                raise ScenarioError(
                    f"assignment: channel {min(both) + 1} in both exclusive and shared set of user {i + 1}"
                )
        owner = {}
        for i, s in enumerate(self.exclusive):
            for j in s:
                if j in owner:
                    raise ScenarioError(
                        f"assignment: exclusive-set overlap, channel {j + 1} owned by users {owner[j] + 1} and {i + 1}"
                    )
                owner[j] = i
        count = {}
        for i, c in enumerate(self.shared):
            for j in c:
                if j in owner:
                    raise ScenarioError(
                        f"assignment: shared channel {j + 1} of user {i + 1} is exclusive to user {owner[j] + 1}"
                    )
                count[j] = count.get(j, 0) + 1
        for j, k in sorted(count.items()):
            if k < 2:
                raise ScenarioError(f"assignment: shared channel {j + 1} has a single sharer")

    # -- constructors -------------------------------------------------------

    @classmethod
    def empty(cls, num_users, num_channels):
        return cls(num_channels, ((),) * num_users, ((),) * num_users)

    @classmethod
    def non_overlapping(cls, sets, num_channels):
        return cls(num_channels, tuple(sets), ((),) * len(sets))

    @classmethod
    def from_holders(cls, holders, num_users):
        """Build from per-channel holder collections (0, 1 or >= 2 users each)."""
        excl = [[] for _ in range(num_users)]
        shar = [[] for _ in range(num_users)]
        for j, users in enumerate(holders):
            users = sorted(set(users))
            if len(users) == 1:
                excl[users[0]].append(j)
            else:
                for u in users:
                    shar[u].append(j)
        return cls(len(holders), tuple(excl), tuple(shar))

    @classmethod
    def from_matrix(cls, x):
        """Inverse of :meth:`to_matrix`; single holders become exclusive."""
        x = np.asarray(x)
        if x.ndim != 2 or not np.isin(x, (0, 1)).all():
            raise ScenarioError("assignment matrix must be a 0/1 matrix")
        return cls.from_holders([np.flatnonzero(x[:, j]).tolist() for j in range(x.shape[1])], x.shape[0])

    # -- views --------------------------------------------------------------

    @property
    def num_users(self) -> int:
        return len(self.exclusive)

    def total(self, i):
        return tuple(sorted(self.exclusive[i] + self.shared[i]))

    def holders(self, j):
        """U_j: sharers of a shared channel, the owner of an exclusive one."""
        return self.views.sharers[j]

    def owner(self, j):
        for i, s in enumerate(self.exclusive):
            if j in s:
                return i
        return None

    @property
    def views(self) -> "AssignmentViews":
        v = self.__dict__.get("_views")
        if v is None:
            v = derive_views(self)
            object.__setattr__(self, "_views", v)
        return v

    def to_matrix(self):
        x = np.zeros((self.num_users, self.num_channels), dtype=np.int8)
        for i in range(self.num_users):
            x[i, list(self.total(i))] = 1
        return x

    def to_arrays(self):
        """(owner, share_mask) arrays used by the numeric kernels.

        owner[j] is the exclusive holder of channel j or -1; share_mask[j] is a
        bitmask over users for shared channels and 0 otherwise.
        """
        owner = np.full(self.num_channels, -1, dtype=np.int64)
        mask = np.zeros(self.num_channels, dtype=np.int64)
        for i in range(self.num_users):
            for j in self.exclusive[i]:
                owner[j] = i
            for j in self.shared[i]:
                mask[j] |= 1 << i
        return owner, mask

    @property
    def is_non_overlapping(self) -> bool:
        return not any(self.shared)

    def with_sets(self, exclusive=None, shared=None):
        return Assignment(
            self.num_channels,
            self.exclusive if exclusive is None else tuple(exclusive),
            self.shared if shared is None else tuple(shared),
        )


@dataclass(frozen=True)
class AssignmentViews:
    sharers: tuple  # U_j per channel
    groups: dict  # l -> channels held by exactly l users (l = 1: exclusive)
    totals: tuple  # S_i^tot per user


def derive_views(assignment: Assignment) -> AssignmentViews:
    """Compute U_j, the sharing groups G_l and S_i^tot from the S sets."""
    holders = [[] for _ in range(assignment.num_channels)]
    for i in range(assignment.num_users):
        for j in assignment.exclusive[i]:
            holders[j].append(i)
        for j in assignment.shared[i]:
            holders[j].append(i)
    sharers = tuple(tuple(sorted(h)) for h in holders)
    groups = {}
    for j, h in enumerate(sharers):
        if h:
            groups.setdefault(len(h), []).append(j)
    groups = {k: tuple(v) for k, v in sorted(groups.items())}
    totals = tuple(assignment.total(i) for i in range(assignment.num_users))
    return AssignmentViews(sharers, groups, totals)


COLLISION_MODELS = ("formula", "exact")


@dataclass(frozen=True)
class MacTiming:
    """MAC timing in microseconds plus the collision target and window cap.

    ``collision_model`` picks the conditional first-collision probability
    used for window selection: ``"formula"`` (default) is the truncated
    closed form, ``"exact"`` also counts all contenders drawing W - 1.
    """

    slot: float = 20.0
    t_rts: float = 48.0
    t_cts: float = 40.0
    t_sifs: float = 28.0
    t_sen: float = 0.0
    t_syn: float = 0.0
    t_cycle: float = 3000.0
    eps_p: float = 0.03
    w_max: int = 1024
    collision_model: str = "formula"

    def __post_init__(self):
        for name in ("slot", "t_rts", "t_cts", "t_sifs", "t_sen", "t_syn"):
            if getattr(self, name) < 0:
                raise ScenarioError(f"timing: {name} must be >= 0")
        if self.t_cycle <= self.fixed_overhead:
            raise ScenarioError("timing: t_cycle must exceed sensing, sync and handshake time")
        if not 0.0 < self.eps_p < 1.0:
            raise ScenarioError("timing: eps_p must lie in (0, 1)")
        if int(self.w_max) != self.w_max or self.w_max < 2:
            raise ScenarioError("timing: w_max must be an integer >= 2")
        if self.collision_model not in COLLISION_MODELS:
            raise ScenarioError(f"timing: collision_model must be one of {COLLISION_MODELS}")

    @property
    def handshake(self) -> float:
        return self.t_rts + self.t_cts + 3.0 * self.t_sifs

    @property
    def fixed_overhead(self) -> float:
        return self.handshake + self.t_sen + self.t_syn

    @classmethod
    def paper(cls, **overrides):
        """Preset ``paper-2012``: 6 Mb/s RTS/CTS, 3 ms cycle, eps_p = 0.03."""
        return cls(**overrides)


PRESETS = {"paper-2012": MacTiming.paper}


@dataclass(frozen=True, eq=False)
class SensingModel:
    """Detection and false-alarm probabilities per (user, channel)."""

    pd: np.ndarray
    pf: np.ndarray

    def __post_init__(self):
        pd = _prob_matrix("P_d", self.pd)
        object.__setattr__(self, "pd", pd)
        object.__setattr__(self, "pf", _prob_matrix("P_f", self.pf, pd.shape))

    @classmethod
    def perfect(cls, num_users, num_channels):
        return cls(np.ones((num_users, num_channels)), np.zeros((num_users, num_channels)))

    @classmethod
    def uniform(cls, num_users, num_channels, pd, pf):
        return cls(np.full((num_users, num_channels), pd), np.full((num_users, num_channels), pf))

    @property
    def is_perfect(self) -> bool:
        return bool(np.all(self.pd == 1.0) and np.all(self.pf == 0.0))

    def p_idle(self, model: AvailabilityModel) -> np.ndarray:
        """Probability a channel is sensed idle (correctly or by mis-detection)."""
        return (1.0 - self.pf) * model.p + (1.0 - self.pd) * model.q

    def p_busy(self, model: AvailabilityModel) -> np.ndarray:
        return 1.0 - self.p_idle(model)

    def p_good(self, model: AvailabilityModel) -> np.ndarray:
        """Probability a channel is idle and sensed idle."""
        return (1.0 - self.pf) * model.p

    def __eq__(self, other):
        return (
            isinstance(other, SensingModel)
            and np.array_equal(self.pd, other.pd)
            and np.array_equal(self.pf, other.pf)
        )

    __hash__ = None


@dataclass(frozen=True)
class Scenario:
    model: AvailabilityModel
    timing: MacTiming = field(default_factory=MacTiming)
    sensing: SensingModel | None = None
    assignment: Assignment | None = None

    @property
    def M(self):
        return self.model.num_users

    @property
    def N(self):
        return self.model.num_channels


def validate_scenario(model, assignment=None, timing=None, sensing=None) -> Scenario:
    """Check cross-object consistency and return a :class:`Scenario`.

    Per-object invariants are enforced at construction; this adds the
    dimension checks that tie the objects together.
    """
    if not isinstance(model, AvailabilityModel):
        model = AvailabilityModel(model)
    M, N = model.p.shape
    if assignment is not None:
        if assignment.num_users != M or assignment.num_channels != N:
            raise ScenarioError(
                f"assignment: dimension mismatch, expected {M} users x {N} channels, "
                f"got {assignment.num_users} x {assignment.num_channels}"
            )
    if sensing is not None and sensing.pd.shape != (M, N):
        raise ScenarioError(
            f"sensing: dimension mismatch, expected {M}x{N}, got {sensing.pd.shape[0]}x{sensing.pd.shape[1]}"
        )
    return Scenario(model, timing or MacTiming(), sensing, assignment)


def table1_assignment() -> Assignment:
    """The three-user, six-channel layout used throughout the tests."""
    return Assignment(6, ((0,), (1,), (2,)), ((3, 5), (3, 4, 5), (4, 5)))
