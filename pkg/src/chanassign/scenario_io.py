"""Scenario files (JSON) and assignment edge lists (CSV).

Scenario schema, all indices 1-based::

    {
      "M": 3, "N": 6,
      "p":  [[...], ...],                  # M x N idle probabilities
      "pd": [[...], ...], "pf": [[...]],   # optional, together
      "timing": {"preset": "paper-2012", "eps_p": 0.03, ...},   # optional
      "assignment": {"exclusive": [[1], [2], [3]],             # optional
                     "shared": [[4, 6], [4, 5, 6], [5, 6]]}
    }

Unknown keys are rejected at every level.
"""
from __future__ import annotations

import csv
import io
import json
import os
import tempfile
from dataclasses import asdict, fields

import numpy as np

from .model import PRESETS, Assignment, AvailabilityModel, MacTiming, Scenario, ScenarioError, SensingModel, validate_scenario

TOP_KEYS = {"M", "N", "p", "pd", "pf", "timing", "assignment"}
TIMING_KEYS = {f.name for f in fields(MacTiming)} | {"preset"}
ASSIGN_KEYS = {"exclusive", "shared"}


def _reject_unknown(obj, allowed, where):
    if not isinstance(obj, dict):
        raise ScenarioError(f"{where}: expected an object")
    extra = sorted(set(obj) - allowed)
    if extra:
        raise ScenarioError(f"{where}: unknown key(s) {', '.join(extra)}")


def timing_from_dict(d: dict | None) -> MacTiming:
    if d is None:
        return MacTiming.paper()
    _reject_unknown(d, TIMING_KEYS, "timing")
    d = dict(d)
    preset = d.pop("preset", "paper-2012")
    if preset not in PRESETS:
        raise ScenarioError(f"timing: unknown preset {preset!r}")
    return PRESETS[preset](**d)


def assignment_from_dict(d: dict, M: int, N: int) -> Assignment:
    _reject_unknown(d, ASSIGN_KEYS, "assignment")
    out = {}
    for key in ASSIGN_KEYS:
        sets = d.get(key, [[] for _ in range(M)])
        if len(sets) != M:
            raise ScenarioError(f"assignment.{key}: expected {M} sets, got {len(sets)}")
        conv = []
        for i, s in enumerate(sets):
            for c in s:
                if int(c) != c or not 1 <= c <= N:
                    raise ScenarioError(f"assignment.{key}: channel {c} of user {i + 1} outside 1..{N}")
            conv.append(tuple(int(c) - 1 for c in s))
        out[key] = tuple(conv)
    return Assignment(N, out["exclusive"], out["shared"])


def scenario_from_dict(d: dict) -> Scenario:
    _reject_unknown(d, TOP_KEYS, "scenario")
    for key in ("M", "N", "p"):
        if key not in d:
            raise ScenarioError(f"scenario: missing key {key}")
    M, N = d["M"], d["N"]
    if not (isinstance(M, int) and isinstance(N, int)) or M < 1 or N < 1:
        raise ScenarioError("scenario: M and N must be positive integers")
    p = np.asarray(d["p"], dtype=float)
    if p.shape != (M, N):
        raise ScenarioError(f"dimension mismatch: p is {p.shape}, expected ({M}, {N})")
    model = AvailabilityModel(p)
    if ("pd" in d) != ("pf" in d):
        raise ScenarioError("scenario: pd and pf must be given together")
    sensing = SensingModel(np.asarray(d["pd"], float), np.asarray(d["pf"], float)) if "pd" in d else None
    timing = timing_from_dict(d.get("timing"))
    assignment = assignment_from_dict(d["assignment"], M, N) if "assignment" in d else None
    validate_scenario(model, assignment, timing, sensing)
    return Scenario(model, timing, sensing, assignment)


def assignment_to_dict(a: Assignment) -> dict:
    return {
        "exclusive": [[j + 1 for j in s] for s in a.exclusive],
        "shared": [[j + 1 for j in s] for s in a.shared],
    }


def scenario_to_dict(sc: Scenario) -> dict:
    M, N = sc.model.p.shape
    d = {"M": M, "N": N, "p": sc.model.p.tolist()}
    if sc.sensing is not None:
        d["pd"] = sc.sensing.pd.tolist()
        d["pf"] = sc.sensing.pf.tolist()
    t = asdict(sc.timing)
    d["timing"] = {"preset": "paper-2012", **t}
    if sc.assignment is not None:
        d["assignment"] = assignment_to_dict(sc.assignment)
    return d


def load_scenario(path) -> Scenario:
    with open(path) as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ScenarioError(f"{path}: not valid JSON ({exc})") from exc
    return scenario_from_dict(data)


def dumps_scenario(sc: Scenario) -> str:
    return json.dumps(scenario_to_dict(sc), indent=2) + "\n"


def atomic_write(path, text: str) -> None:
    """Write to a temporary file next to ``path`` and rename it into place."""
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def save_scenario(sc: Scenario, path) -> None:
    atomic_write(path, dumps_scenario(sc))


def assignment_edges_csv(a: Assignment) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["user", "channel", "kind"])
    for i in range(a.num_users):
        for j in a.exclusive[i]:
            w.writerow([i + 1, j + 1, "exclusive"])
        for j in a.shared[i]:
            w.writerow([i + 1, j + 1, "shared"])
    return buf.getvalue()


def assignment_from_edges_csv(text: str, M: int, N: int) -> Assignment:
    rows = list(csv.DictReader(io.StringIO(text)))
    excl = [[] for _ in range(M)]
    shar = [[] for _ in range(M)]
    for r in rows:
        if set(r) != {"user", "channel", "kind"}:
            raise ScenarioError("edge list: expected columns user, channel, kind")
        i, j = int(r["user"]) - 1, int(r["channel"]) - 1
        if not (0 <= i < M and 0 <= j < N):
            raise ScenarioError(f"edge list: ({i + 1},{j + 1}) outside {M}x{N}")
        if r["kind"] == "exclusive":
            excl[i].append(j)
        elif r["kind"] == "shared":
            shar[i].append(j)
        else:
            raise ScenarioError(f"edge list: unknown kind {r['kind']!r}")
    return Assignment(N, tuple(map(tuple, excl)), tuple(map(tuple, shar)))
