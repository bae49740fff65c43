"""Time the numba kernels against the pure-numpy fallback.

    python3 benchmarks/bench_backends.py [--cycles 200000] [--repeat 3]

Backends are toggled through CHANASSIGN_BACKEND inside one process; the
first numba call of each kernel (compilation or cache load) is excluded.
"""
import argparse
import os
import time

import numpy as np

from chanassign._backend import BACKEND_ENV
from chanassign.analytics import per_user_throughput
from chanassign.assignment import ObjectiveKind, brute_force_all, round_robin
from chanassign.model import AvailabilityModel, MacTiming, table1_assignment
from chanassign.simulator import SimConfig, simulate


def _time(fn, repeat):
    fn()  # warm-up
    best = float("inf")
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t)
    return best, out


def main(argv=None):
    ap = argparse.ArgumentParser()
    ap.add_argument("--cycles", type=int, default=200_000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)

    timing = MacTiming.paper()
    t1 = AvailabilityModel(np.full((3, 6), 0.8))
    big = AvailabilityModel(np.random.default_rng(0).uniform(0.7, 0.9, (10, 30)))
    small = AvailabilityModel(np.random.default_rng(1).uniform(0.7, 0.9, (2, 6)))
    cases = {
        "throughput M=10 N=30 rr:3": lambda: per_user_throughput(big, round_robin(big, 3), 0.1),
        "brute force M=2 N=6": lambda: brute_force_all(small, timing)[ObjectiveKind.SUM_THROUGHPUT].value,
        f"simulate table-I {args.cycles} cycles": lambda: simulate(
            t1, table1_assignment(), timing, SimConfig(cycles=args.cycles, seed=1)
        ).total,
    }
    print(f"{'case':40s} {'numba s':>10s} {'numpy s':>10s} {'speedup':>8s}  same")
    for name, fn in cases.items():
        res = {}
        for backend in ("numba", "numpy"):
            os.environ[BACKEND_ENV] = backend
            res[backend] = _time(fn, args.repeat)
        os.environ.pop(BACKEND_ENV, None)
        (tn, on), (tp, op) = res["numba"], res["numpy"]
        same = np.array_equal(np.asarray(on), np.asarray(op)) or np.allclose(on, op, rtol=0, atol=1e-12)
        print(f"{name:40s} {tn:10.4f} {tp:10.4f} {tp / tn:8.1f}  {same}")


if __name__ == "__main__":
    main()
