"""Scenario generation, parameter sweeps and greedy-vs-optimal comparisons.

Every row carries the master seed, the realization index and the derived
scenario seed, so a single row can be re-derived on its own. Rows are
sorted canonically before writing, so output does not depend on worker
scheduling.
"""
from __future__ import annotations

import csv
import io
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import analytics
from .assignment import (
    ObjectiveKind,
    algorithm1,
    algorithm2,
    algorithm3_fair,
    algorithm4_fair,
    brute_force_all,
    brute_force_optimal,
    round_robin,
)
from .model import AvailabilityModel, MacTiming, SensingModel
from .scenario_io import atomic_write
from .simulator import SimConfig, simulate

THREADS_ENV = "CHANASSIGN_THREADS"
SWEEPS = ("N", "W", "eps_p", "pf")

ROW_FIELDS = [
    "sweep", "value", "realization", "master_seed", "scenario_seed", "algorithm", "evaluation",
    "M", "N", "W", "delta", "per_user", "total", "min", "collision", "se", "error_bound",
]
SUMMARY_FIELDS = ["sweep", "value", "algorithm", "evaluation", "realizations", "W", "delta", "total", "min", "collision"]
GAP_FIELDS = ["M", "N", "realization", "scenario_seed", "objective", "greedy", "optimal", "gap"]


def derive_seed(master: int, *keys: int) -> int:
    return int(np.random.SeedSequence([int(master), *map(int, keys)]).generate_state(1, np.uint64)[0])


def generate_scenario(M, N, low, high, seed) -> AvailabilityModel:
    """p_ij drawn i.i.d. uniform on [low, high] from a seeded generator."""
    if not 0.0 <= low <= high <= 1.0:
        raise ValueError(f"invalid probability range [{low}, {high}]")
    if M < 1 or N < 1:
        raise ValueError("M and N must be positive")
    rng = np.random.default_rng(seed)
    return AvailabilityModel(rng.uniform(low, high, size=(M, N)))


def parse_algorithm(name: str):
    if name in ("alg1", "alg2", "alg3", "alg4", "brute-sum", "brute-maxmin"):
        return name, None
    if name.startswith("rr:"):
        k = int(name[3:])
        if k < 1:
            raise ValueError("rr:k needs k >= 1")
        return "rr", k
    raise ValueError(f"unknown algorithm {name!r}")


def run_algorithm(name: str, model: AvailabilityModel, timing: MacTiming):
    kind, k = parse_algorithm(name)
    if kind == "alg1":
        return algorithm1(model)
    if kind == "alg2":
        return algorithm2(model, timing).assignment
    if kind == "alg3":
        return algorithm3_fair(model)
    if kind == "alg4":
        return algorithm4_fair(model, timing).assignment
    if kind == "brute-sum":
        return brute_force_optimal(model, timing, ObjectiveKind.SUM_THROUGHPUT).assignment
    if kind == "brute-maxmin":
        return brute_force_optimal(model, timing, ObjectiveKind.MAX_MIN).assignment
    return round_robin(model, k)


@dataclass(frozen=True)
class ExperimentSpec:
    M: int = 8
    N: int = 16
    low: float = 0.7
    high: float = 0.9
    realizations: int = 30
    seed: int = 0
    algorithms: tuple = ("alg1", "alg2")
    evaluation: str = "analytic"  # analytic | simulate:<cycles> | both:<cycles>
    sweep: str = "N"
    values: tuple = (16,)
    timing: MacTiming = field(default_factory=MacTiming.paper)
    pd: float = 0.9  # detection probability used by the pf sweep
    output: str | None = None

    def __post_init__(self):
        if not 0.0 <= self.low <= self.high <= 1.0:
            raise ValueError(f"invalid probability range [{self.low}, {self.high}]")
        if self.realizations < 1:
            raise ValueError("realizations must be >= 1")
        if self.sweep not in SWEEPS:
            raise ValueError(f"sweep must be one of {SWEEPS}")
        if not self.values:
            raise ValueError("sweep needs at least one value")
        for a in self.algorithms:
            parse_algorithm(a)
        self.modes()

    def modes(self):
        """(analytic?, simulated cycles or 0)."""
        ev = self.evaluation
        if ev == "analytic":
            return True, 0
        kind, _, n = ev.partition(":")
        if kind in ("simulate", "both") and n.isdigit() and int(n) > 0:
            return kind == "both", int(n)
        raise ValueError(f"evaluation must be analytic, simulate:<cycles> or both:<cycles>, got {ev!r}")


def _fmt(x):
    return repr(float(x))


def _row(spec, vi, r, sseed, alg, ev, N, W, delta, T, collision, se, eb):
    return {
        "sweep": spec.sweep, "value": spec.values[vi], "realization": r, "master_seed": spec.seed,
        "scenario_seed": sseed, "algorithm": alg, "evaluation": ev, "M": spec.M, "N": N, "W": W,
        "delta": _fmt(delta), "per_user": ";".join(_fmt(t) for t in T), "total": _fmt(np.sum(T)),
        "min": _fmt(np.min(T)), "collision": _fmt(collision), "se": _fmt(se), "error_bound": _fmt(eb),
    }


def _point(spec: ExperimentSpec, vi: int, r: int):
    """All rows for one (sweep value, realization) pair."""
    value = spec.values[vi]
    N = int(value) if spec.sweep == "N" else spec.N
    timing = replace(spec.timing, eps_p=float(value)) if spec.sweep == "eps_p" else spec.timing
    sensing = SensingModel.uniform(spec.M, N, spec.pd, float(value)) if spec.sweep == "pf" else None
    sseed = derive_seed(spec.seed, vi, r)
    model = generate_scenario(spec.M, N, spec.low, spec.high, sseed)
    analytic, cycles = spec.modes()
    rows = []
    for ai, alg in enumerate(spec.algorithms):
        a = run_algorithm(alg, model, timing)
        if spec.sweep == "W":
            W = int(value)
            delta = analytics.mac_overhead(timing, W)
            T = analytics.per_user_throughput(model, a, delta)
            pc = analytics.first_collision_prob(model, a, W, collision_model=timing.collision_model)
            eb = analytics.analysis_error_bound(model, a, timing.eps_p)
        else:
            rep = analytics.network_throughput(model, a, timing, sensing)
            W, delta, T, eb = rep.window, rep.delta, rep.per_user, rep.error_bound
            sens = sensing if rep.mode == "imperfect" else None
            pc = analytics.first_collision_prob(model, a, W, sens, timing.collision_model)
        if analytic:
            rows.append(_row(spec, vi, r, sseed, alg, "analytic", N, W, delta, T, pc, 0.0, eb))
        if cycles:
            cfg = SimConfig(cycles=cycles, seed=derive_seed(sseed, ai), sensing=sensing)
            sim = simulate(model, a, timing, cfg, window=W)
            rows.append(_row(spec, vi, r, sseed, alg, "simulate", N, W, sim.delta, sim.per_user,
                             sim.first_collision_rate, sim.total_se, eb))
    return vi, r, rows


def _threads():
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


def run_experiment(spec: ExperimentSpec, workers: int | None = None):
    """Run the sweep; returns (rows, summary). Writes both CSVs if ``spec.output`` is set."""
    jobs = [(vi, r) for vi in range(len(spec.values)) for r in range(spec.realizations)]
    workers = workers or _threads()
    if workers > 1:
        with ProcessPoolExecutor(workers) as ex:
            results = list(ex.map(_point, [spec] * len(jobs), *zip(*jobs)))
    else:
        results = [_point(spec, vi, r) for vi, r in jobs]
    results.sort(key=lambda t: (t[0], t[1]))
    rows = [row for _, _, rs in results for row in rs]
    summary = summarize(rows, spec)
    if spec.output:
        atomic_write(spec.output, to_csv(rows, ROW_FIELDS))
        atomic_write(summary_path(spec.output), to_csv(summary, SUMMARY_FIELDS))
    return rows, summary


def summary_path(path):
    root, ext = os.path.splitext(path)
    return f"{root}.summary{ext or '.csv'}"


def summarize(rows, spec: ExperimentSpec):
    order = {a: k for k, a in enumerate(spec.algorithms)}
    groups = {}
    for row in rows:
        key = (spec.values.index(row["value"]), order[row["algorithm"]], row["evaluation"])
        groups.setdefault(key, []).append(row)
    out = []
    for key in sorted(groups):
        g = groups[key]
        mean = lambda f: _fmt(np.mean([float(x[f]) for x in g]))  # noqa: E731
        out.append({
            "sweep": spec.sweep, "value": g[0]["value"], "algorithm": g[0]["algorithm"],
            "evaluation": g[0]["evaluation"], "realizations": len(g), "W": mean("W"),
            "delta": mean("delta"), "total": mean("total"), "min": mean("min"), "collision": mean("collision"),
        })
    return out


def to_csv(rows, header) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=header, lineterminator="\n")
    w.writeheader()
    w.writerows(rows)
    return buf.getvalue()


def compare_optimal(M, n_values, realizations=10, low=0.7, high=0.9, seed=0, timing=None, cap=18):
    """Greedy (alg2 for sum, alg4 for max-min) against brute force; one row per instance and objective."""
    timing = timing or MacTiming.paper()
    rows = []
    for N in n_values:
        for r in range(realizations):
            sseed = derive_seed(seed, M, N, r)
            model = generate_scenario(M, N, low, high, sseed)
            opt = brute_force_all(model, timing, cap)
            greedy_sum = analytics.network_throughput(model, algorithm2(model, timing).assignment, timing).total
            greedy_min = algorithm4_fair(model, timing).min_history[-1]
            for obj, g in ((ObjectiveKind.SUM_THROUGHPUT, greedy_sum), (ObjectiveKind.MAX_MIN, greedy_min)):
                o = opt[obj].value
                rows.append({
                    "M": M, "N": N, "realization": r, "scenario_seed": sseed, "objective": obj.value,
                    "greedy": _fmt(g), "optimal": _fmt(o), "gap": _fmt((o - g) / o if o > 0 else 0.0),
                })
    return rows
