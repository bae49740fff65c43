"""Command-line entry point: ``chanassign <subcommand> ...``.

Exit codes: 0 success, 2 invalid input, 3 no feasible contention window,
4 brute-force size cap exceeded.
"""
from __future__ import annotations

import argparse
import os
import sys
from dataclasses import replace

from .analytics import WindowCapExceeded, network_throughput, report_csv
from .assignment import BruteForceCapExceeded
from .experiments import (
    GAP_FIELDS,
    ExperimentSpec,
    compare_optimal,
    generate_scenario,
    run_algorithm,
    run_experiment,
    to_csv,
)
from .model import PRESETS, Scenario, ScenarioError, SensingModel
from .scenario_io import assignment_edges_csv, atomic_write, dumps_scenario, load_scenario
from .simulator import SimConfig, simulate

OUTPUT_DIR_ENV = "CHANASSIGN_OUTPUT_DIR"
EXIT_INVALID, EXIT_WINDOW, EXIT_CAP = 2, 3, 4


def _out_path(path):
    base = os.environ.get(OUTPUT_DIR_ENV)
    if base and not os.path.isabs(path):
        return os.path.join(base, path)
    return path


def _emit(text, path):
    if path:
        atomic_write(_out_path(path), text)
    else:
        sys.stdout.write(text)


def _numbers(text, kind=float):
    """Parse ``a,b,c`` or an inclusive range ``a:b[:step]``."""
    if ":" in text:
        parts = [kind(x) for x in text.split(":")]
        lo, hi = parts[0], parts[1]
        step = parts[2] if len(parts) > 2 else 1
        if step <= 0:
            raise argparse.ArgumentTypeError("range step must be positive")
        out, x = [], lo
        while x <= hi + 1e-12:
            out.append(kind(x))
            x += step
        return tuple(out)
    return tuple(kind(x) for x in text.split(",") if x)


def _timing(args, base=None):
    t = base if base is not None else PRESETS[args.preset]()
    over = {}
    if getattr(args, "eps_p", None) is not None:
        over["eps_p"] = args.eps_p
    if getattr(args, "w_max", None) is not None:
        over["w_max"] = args.w_max
    if getattr(args, "collision_model", None):
        over["collision_model"] = args.collision_model
    return replace(t, **over) if over else t


def _resolve(args):
    """Scenario from --scenario, with --algorithm overriding any stored assignment."""
    sc = load_scenario(args.scenario)
    timing = _timing(args, sc.timing)
    assignment = sc.assignment
    if getattr(args, "algorithm", None):
        assignment = run_algorithm(args.algorithm, sc.model, timing)
    if assignment is None:
        raise ScenarioError("scenario has no assignment; pass --algorithm")
    return replace(sc, timing=timing, assignment=assignment)


def cmd_gen(args):
    model = generate_scenario(args.M, args.N, args.low, args.high, args.seed)
    sensing = None
    if args.pd is not None or args.pf is not None:
        sensing = SensingModel.uniform(args.M, args.N, 1.0 if args.pd is None else args.pd, args.pf or 0.0)
    timing = _timing(args)
    assignment = run_algorithm(args.algorithm, model, timing) if args.algorithm else None
    _emit(dumps_scenario(Scenario(model, timing, sensing, assignment)), args.emit)


def cmd_assign(args):
    sc = _resolve(args)
    if args.emit:
        atomic_write(_out_path(args.emit), dumps_scenario(sc))
    _emit(assignment_edges_csv(sc.assignment), args.out)


def cmd_analyze(args):
    sc = _resolve(args)
    rep = network_throughput(sc.model, sc.assignment, sc.timing, sc.sensing)
    _emit(report_csv([rep], sc.model.num_channels, ids=[args.id]), args.out)


def cmd_simulate(args):
    sc = _resolve(args)
    cfg = SimConfig(cycles=args.cycles, seed=args.seed, overhead_mode=args.mode, sensing=sc.sensing)
    rep = simulate(sc.model, sc.assignment, sc.timing, cfg, window=args.window)
    _emit(rep.to_csv(), args.out)
    print(rep.summary_line(), file=sys.stderr)


def cmd_sweep(args):
    spec = ExperimentSpec(
        M=args.M, N=args.N, low=args.low, high=args.high, realizations=args.realizations,
        seed=args.seed, algorithms=tuple(args.algorithms.split(",")), evaluation=args.evaluation,
        sweep=args.sweep, values=_numbers(args.values, int if args.sweep in ("N", "W") else float),
        timing=_timing(args), pd=args.pd, output=_out_path(args.out),
    )
    _, summary = run_experiment(spec, workers=args.workers)
    print(to_csv(summary, list(summary[0])), end="")


def cmd_compare(args):
    rows = compare_optimal(args.M, _numbers(args.n_values, int), args.realizations, args.low, args.high,
                           args.seed, _timing(args), cap=args.cap)
    _emit(to_csv(rows, GAP_FIELDS), args.out)


def _common_timing(p):
    p.add_argument("--preset", default="paper-2012", choices=sorted(PRESETS))
    p.add_argument("--eps-p", type=float, dest="eps_p")
    p.add_argument("--w-max", type=int, dest="w_max")
    p.add_argument("--collision-model", choices=("formula", "exact"))


def _range_args(p):
    p.add_argument("--low", type=float, default=0.7)
    p.add_argument("--high", type=float, default=0.9)
    p.add_argument("--seed", type=int, default=0)


def build_parser():
    ap = argparse.ArgumentParser(prog="chanassign", description="Channel assignment for cognitive radio networks.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a random scenario file")
    p.add_argument("--M", type=int, required=True)
    p.add_argument("--N", type=int, required=True)
    _range_args(p)
    p.add_argument("--pd", type=float)
    p.add_argument("--pf", type=float)
    p.add_argument("--algorithm", help="also store this algorithm's assignment")
    p.add_argument("--emit", help="write the scenario here instead of stdout")
    _common_timing(p)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("assign", help="run an assignment algorithm on a scenario")
    p.add_argument("--scenario", required=True)
    p.add_argument("--algorithm", required=True, help="alg1|alg2|alg3|alg4|brute-sum|brute-maxmin|rr:k")
    p.add_argument("--out", help="edge-list CSV path (default stdout)")
    p.add_argument("--emit", help="also write the scenario with the assignment attached")
    _common_timing(p)
    p.set_defaults(func=cmd_assign)

    p = sub.add_parser("analyze", help="analytic throughput report")
    p.add_argument("--scenario", required=True)
    p.add_argument("--algorithm")
    p.add_argument("--id", default="scenario")
    p.add_argument("--out")
    _common_timing(p)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("simulate", help="Monte Carlo simulation of the MAC")
    p.add_argument("--scenario", required=True)
    p.add_argument("--algorithm")
    p.add_argument("--cycles", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--mode", choices=("analytic", "timed"), default="analytic")
    p.add_argument("--window", type=int, help="override the selected contention window")
    p.add_argument("--out")
    _common_timing(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", help="parameter sweep over random realizations")
    p.add_argument("--M", type=int, default=8)
    p.add_argument("--N", type=int, default=16, help="channel count when not sweeping N")
    _range_args(p)
    p.add_argument("--realizations", type=int, default=30)
    p.add_argument("--algorithms", default="alg1,alg2,rr:1,rr:5")
    p.add_argument("--evaluation", default="analytic", help="analytic | simulate:<cycles> | both:<cycles>")
    p.add_argument("--sweep", choices=("N", "W", "eps_p", "pf"), default="N")
    p.add_argument("--values", required=True, help="a,b,c or lo:hi[:step]")
    p.add_argument("--pd", type=float, default=0.9)
    p.add_argument("--workers", type=int)
    p.add_argument("--out", required=True)
    _common_timing(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("compare-optimal", help="greedy versus brute-force optimum")
    p.add_argument("--M", type=int, required=True)
    p.add_argument("--n-values", required=True, dest="n_values")
    p.add_argument("--realizations", type=int, default=10)
    p.add_argument("--cap", type=int, default=18)
    _range_args(p)
    p.add_argument("--out")
    _common_timing(p)
    p.set_defaults(func=cmd_compare)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except WindowCapExceeded as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_WINDOW
    except BruteForceCapExceeded as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CAP
    except (ScenarioError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    return 0


if __name__ == "__main__":
    sys.exit(main())
