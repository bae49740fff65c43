import json

import numpy as np
import pytest

from chanassign import cli
from chanassign.analytics import network_throughput
from chanassign.experiments import (
    ExperimentSpec,
    compare_optimal,
    generate_scenario,
    parse_algorithm,
    run_experiment,
    summary_path,
)
from chanassign.model import Assignment, AvailabilityModel, MacTiming, Scenario, ScenarioError, SensingModel, table1_assignment
from chanassign.scenario_io import (
    assignment_edges_csv,
    assignment_from_edges_csv,
    dumps_scenario,
    load_scenario,
    scenario_from_dict,
)


def test_generate_scenario_examples():
    assert np.all(generate_scenario(2, 3, 0.8, 0.8, 1).p == 0.8)
    assert np.array_equal(generate_scenario(3, 4, 0.7, 0.9, 5).p, generate_scenario(3, 4, 0.7, 0.9, 5).p)
    a, b = generate_scenario(3, 4, 0.7, 0.9, 5).p, generate_scenario(3, 4, 0.7, 0.9, 6).p
    assert not np.array_equal(a, b)
    assert np.all((a >= 0.7) & (a <= 0.9)) and np.all((b >= 0.7) & (b <= 0.9))
    with pytest.raises(ValueError):
        generate_scenario(2, 2, 0.9, 0.7, 0)


def test_spec_validation():
    with pytest.raises(ValueError):
        ExperimentSpec(realizations=0)
    with pytest.raises(ValueError):
        ExperimentSpec(low=0.5, high=1.2)
    with pytest.raises(ValueError):
        ExperimentSpec(evaluation="simulate")
    with pytest.raises(ValueError):
        parse_algorithm("rr:0")
    assert parse_algorithm("rr:3") == ("rr", 3)


def test_degenerate_single_row(paper_timing):
    spec = ExperimentSpec(M=1, N=3, realizations=1, algorithms=("alg1",), values=(3,))
    rows, summary = run_experiment(spec)
    assert len(rows) == 1 and len(summary) == 1
    model = generate_scenario(1, 3, 0.7, 0.9, rows[0]["scenario_seed"])
    expect = network_throughput(model, Assignment.non_overlapping([[0, 1, 2]], 3), paper_timing).total
    assert float(rows[0]["total"]) == expect


def test_summary_means_and_parallel_determinism(tmp_path):
    spec = ExperimentSpec(M=3, N=5, realizations=3, algorithms=("alg1", "alg2", "rr:2"),
                          sweep="N", values=(4, 6), output=str(tmp_path / "a.csv"))
    rows, summary = run_experiment(spec, workers=1)
    for s in summary:
        g = [float(r["total"]) for r in rows if r["value"] == s["value"] and r["algorithm"] == s["algorithm"]]
        assert abs(float(s["total"]) - float(np.mean(g))) <= 1e-12
    par = ExperimentSpec(**{**spec.__dict__, "output": str(tmp_path / "b.csv")})
    run_experiment(par, workers=2)
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    assert (tmp_path / "a.summary.csv").read_bytes() == (tmp_path / "b.summary.csv").read_bytes()
    assert summary_path("x/out.csv") == "x/out.summary.csv"


def test_other_sweeps_run():
    for sweep, values in (("W", (8, 32)), ("eps_p", (0.03, 0.1)), ("pf", (0.0, 0.1))):
        rows, _ = run_experiment(ExperimentSpec(M=2, N=4, realizations=1, algorithms=("alg1", "rr:2"),
                                                sweep=sweep, values=values, evaluation="both:500"))
        assert len(rows) == len(values) * 2 * 2
    rows, _ = run_experiment(ExperimentSpec(M=2, N=4, realizations=1, algorithms=("rr:2",), sweep="W", values=(4, 64)))
    assert float(rows[0]["collision"]) >= float(rows[1]["collision"])


def test_compare_optimal_gaps_nonnegative():
    rows = compare_optimal(2, (2, 3), realizations=2, seed=1)
    assert len(rows) == 2 * 2 * 2
    assert all(float(r["gap"]) >= 0 for r in rows)


# -- scenario files ----------------------------------------------------------


def test_scenario_roundtrip(tmp_path):
    m = AvailabilityModel(np.full((3, 6), 0.8))
    sc = Scenario(m, MacTiming.paper(), SensingModel.uniform(3, 6, 0.9, 0.1), table1_assignment())
    path = tmp_path / "s.json"
    path.write_text(dumps_scenario(sc))
    back = load_scenario(path)
    assert back.assignment == sc.assignment and back.timing == sc.timing
    assert np.array_equal(back.model.p, m.p) and np.array_equal(back.sensing.pf, sc.sensing.pf)


def test_scenario_rejects_bad_input():
    good = {"M": 1, "N": 2, "p": [[0.5, 0.5]]}
    scenario_from_dict(good)
    for bad in ({**good, "extra": 1}, {**good, "p": [[0.5]]}, {**good, "pd": [[1, 1]]},
                {**good, "timing": {"slotz": 3}}, {**good, "assignment": {"exclusive": [[3]]}}):
        with pytest.raises(ScenarioError):
            scenario_from_dict(bad)


def test_edge_list_roundtrip():
    a = table1_assignment()
    assert assignment_from_edges_csv(assignment_edges_csv(a), 3, 6) == a
    with pytest.raises(ScenarioError):
        assignment_from_edges_csv("user,channel,kind\n1,9,shared\n", 3, 6)


# -- CLI ---------------------------------------------------------------------


def test_cli_pipeline(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv(cli.OUTPUT_DIR_ENV, str(tmp_path))
    assert cli.main(["gen", "--M", "3", "--N", "5", "--seed", "2", "--emit", "s.json"]) == 0
    scen = tmp_path / "s.json"
    assert json.loads(scen.read_text())["M"] == 3
    assert cli.main(["assign", "--scenario", str(scen), "--algorithm", "alg2", "--emit", "s2.json", "--out", "e.csv"]) == 0
    assert (tmp_path / "e.csv").read_text().startswith("user,channel,kind")
    capsys.readouterr()
    assert cli.main(["analyze", "--scenario", str(tmp_path / "s2.json")]) == 0
    assert capsys.readouterr().out.count("\n") >= 2
    assert cli.main(["simulate", "--scenario", str(tmp_path / "s2.json"), "--cycles", "1000"]) == 0
    assert "sim mode=analytic" in capsys.readouterr().err
    assert cli.main(["sweep", "--M", "2", "--values", "3:4", "--realizations", "1", "--out", "sw.csv"]) == 0
    assert (tmp_path / "sw.csv").exists() and (tmp_path / "sw.summary.csv").exists()
    assert cli.main(["compare-optimal", "--M", "2", "--n-values", "2", "--realizations", "1"]) == 0


def test_cli_exit_codes(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{"M": 1, "N": 1, "p": [[0.5]], "colour": 1}')
    assert cli.main(["analyze", "--scenario", str(bad), "--algorithm", "alg1"]) == 2
    assert cli.main(["analyze", "--scenario", str(tmp_path / "missing.json")]) == 2
    sc = tmp_path / "s.json"
    sc.write_text(json.dumps({"M": 4, "N": 1, "p": [[1.0]] * 4,
                              "assignment": {"exclusive": [[]] * 4, "shared": [[1]] * 4}}))
    assert cli.main(["analyze", "--scenario", str(sc), "--w-max", "2"]) == 3
    assert cli.main(["compare-optimal", "--M", "4", "--n-values", "5", "--realizations", "1"]) == 4
    assert "error:" in capsys.readouterr().err
