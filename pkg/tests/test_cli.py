import csv
import json

import numpy as np
import pytest
from conftest import bundled_config

from storage_cournot.cli import compare_runs, main
from storage_cournot.clearing import hourly_metrics
from storage_cournot.experiments import RunConfig, build_scenario, run_point, state_from_summary
from storage_cournot.ingest import write_demand_csv, write_res_csv
from storage_cournot.model import DemandCurve
from storage_cournot.synthetic import DATA_DIR


@pytest.fixture
def toy(tmp_path):
    T = 6
    curves = [DemandCurve([300.0, 60.0, 30.0, 5.0], [40.0 + 5 * t, 70.0, 90.0, 110.0], hour=t + 1) for t in range(T)]
    write_demand_csv(tmp_path / "demand.csv", curves, day="toy")
    write_res_csv(tmp_path / "res.csv", [150.0, 140.0, 40.0, 30.0, 130.0, 45.0])
    cfg = {"demand": "demand.csv", "res": "res.csv", "players": 1, "n_levels": 2, "c_rate": 0.5,
           "eta": 0.9, "oc": 0.5, "sweep": {"players": [0, 1, 2, 4, 6, 8]}}
    path = tmp_path / "run.json"
    path.write_text(json.dumps(cfg))
    return path


def read_csv(path):
    with open(path, newline="") as f:
        return list(csv.DictReader(f))


def test_monopoly_nash_run(toy, tmp_path):
    assert main(["nash", "--config", str(toy), "--out", str(tmp_path / "m")]) == 0
    rows = read_csv(tmp_path / "m" / "outcome.csv")
    assert len(rows) == 6
    assert list(rows[0]) == ["hour", "price", "served", "curtailment", "unmet", "cs", "ps", "ch_1", "dis_1", "soc_1"]
    summary = json.loads((tmp_path / "m" / "summary.json").read_text())
    assert summary["converged"] is True and summary["mode"] == "nash"


def test_report_round_trip(toy, tmp_path):
    for mode in ("nash", "planner"):
        out = tmp_path / mode
        assert main([mode, "--config", str(toy), "--out", str(out)]) == 0
        summary = json.loads((out / "summary.json").read_text())
        scenario, _ = build_scenario(RunConfig.load(toy))
        rep = hourly_metrics(state_from_summary(summary, scenario), scenario)
        for key, value in rep.totals().items():
            assert summary["totals"][key] == pytest.approx(value, abs=1e-6)
        rows = read_csv(out / "outcome.csv")
        assert sum(float(r["cs"]) + float(r["ps"]) for r in rows) == pytest.approx(rep.social_welfare, abs=1e-6)


def test_sweep_over_players(toy, tmp_path):
    assert main(["sweep", "--config", str(toy), "--out", str(tmp_path / "s")]) == 0
    rows = read_csv(tmp_path / "s" / "sweep.csv")
    assert [int(r["players"]) for r in rows] == [0, 1, 2, 4, 6, 8]
    assert (tmp_path / "s" / "point_005" / "summary.json").exists()


def test_theta_sweep_rows_equal_standalone_runs(toy, tmp_path):
    data = json.loads(toy.read_text())
    data.update(players=2, sweep={"theta": [0.6, 1.0, 2.5], "mode": "planner"})
    toy.write_text(json.dumps(data))
    assert main(["sweep", "--config", str(toy), "--out", str(tmp_path / "s"), "--jobs", "2"]) == 0
    rows = read_csv(tmp_path / "s" / "sweep.csv")
    assert len(rows) == 3
    cfg = RunConfig.load(toy)
    for row in rows:
        alone = run_point(cfg, "planner", theta=float(row["theta"])).summary()["totals"]
        for key in ("social_welfare", "unmet", "curtailment"):
            assert float(row[key]) == pytest.approx(alone[key], abs=1e-6)


def test_compare_identical_runs_zero_deltas(toy, tmp_path):
    main(["nash", "--config", str(toy), "--out", str(tmp_path / "a")])
    main(["nash", "--config", str(toy), "--out", str(tmp_path / "b")])
    header, rows = compare_runs([tmp_path / "a" / "summary.json", tmp_path / "b" / "summary.json"])
    deltas = [i for i, h in enumerate(header) if h.startswith("delta_")]
    assert all(rows[1][i] == 0 for i in deltas)


def test_compare_planner_against_monopoly(toy, tmp_path):
    main(["nash", "--config", str(toy), "--out", str(tmp_path / "n")])
    main(["planner", "--config", str(toy), "--out", str(tmp_path / "p")])
    out = tmp_path / "cmp.csv"
    assert main(["compare", str(tmp_path / "n" / "summary.json"), str(tmp_path / "p" / "summary.json"),
                 "--out", str(out)]) == 0
    rows = read_csv(out)
    assert float(rows[1]["delta_social_welfare"]) >= -1e-6


def test_compare_duopoly_profit_row(tmp_path):
    cfg = DATA_DIR / "winter.json"
    assert main(["nash", "--config", str(cfg), "--out", str(tmp_path / "d")]) == 0
    main(["planner", "--config", str(cfg), "--out", str(tmp_path / "p")])
    header, rows = compare_runs([tmp_path / "d" / "summary.json", tmp_path / "p" / "summary.json"])
    first = dict(zip(header, rows[0]))
    assert first["profit_2"] > first["profit_1"]


def test_compare_schema_errors(toy, tmp_path):
    main(["nash", "--config", str(toy), "--out", str(tmp_path / "a")])
    other = json.loads((tmp_path / "a" / "summary.json").read_text())
    other["horizon"] = 24
    (tmp_path / "b.json").write_text(json.dumps(other))
    (tmp_path / "c.json").write_text("{}")
    assert main(["compare", str(tmp_path / "a" / "summary.json"), str(tmp_path / "b.json")]) == 3
    assert main(["compare", str(tmp_path / "a" / "summary.json"), str(tmp_path / "c.json")]) == 3
    assert main(["compare", str(tmp_path / "a" / "summary.json")]) == 2


def test_exit_codes(toy, tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["nash", "--config", str(bad)]) == 2
    bad.write_text(json.dumps({"demand": "demand.csv", "res": "res.csv", "mode": "dance"}))
    assert main(["nash", "--config", str(bad)]) == 2
    assert main(["nash", "--config", str(toy), "--tolerance", "-1"]) == 2
    missing = tmp_path / "missing.json"
    missing.write_text(json.dumps({"demand": "nope.csv", "res": "res.csv"}))
    assert main(["nash", "--config", str(missing)]) == 3
    assert "data error [ingest]" in capsys.readouterr().err
    data = json.loads(toy.read_text())
    data.pop("sweep")
    toy.write_text(json.dumps(data))
    assert main(["sweep", "--config", str(toy)]) == 2


def test_solver_failure_exit_code(tmp_path, capsys):
    # four players exceed the dynamic-programming budget; the MILP cannot prove optimality in time
    data = json.loads((DATA_DIR / "winter.json").read_text())
    data.update(demand=str(DATA_DIR / "winter_demand.csv"), capacity_factors=str(DATA_DIR / "winter_cf.csv"),
                players=4, time_limit=0.5)
    cfg = tmp_path / "slow.json"
    cfg.write_text(json.dumps(data))
    assert main(["planner", "--config", str(cfg), "--out", str(tmp_path / "p")]) == 4
    assert "solver error [milp]" in capsys.readouterr().err


def test_validate_ingest_size(toy, tmp_path, capsys):
    assert main(["validate", "--config", str(toy)]) == 0
    assert main(["ingest", "--config", str(DATA_DIR / "summer.json"), "--out", str(tmp_path / "i")]) == 0
    assert len(read_csv(tmp_path / "i" / "res.csv")) == 24
    assert main(["size", "--config", str(toy), "--out", str(tmp_path / "z")]) == 0
    sizing = json.loads((tmp_path / "z" / "sizing.json").read_text())
    assert sizing["q_max"] == np.ceil(0.5 * sizing["e_max"])


def test_validate_reports_violations(toy, capsys):
    data = json.loads(toy.read_text())
    data["price_cap"] = 100.0
    toy.write_text(json.dumps(data))
    assert main(["validate", "--config", str(toy)]) == 3
    assert "price above cap" in capsys.readouterr().out


def test_bundled_configs_load():
    for season in ("winter", "summer"):
        cfg = bundled_config(season)
        assert cfg.demand.exists() and cfg.capacity_factors.exists()
        assert cfg.grid() == [{"players": n} for n in (0, 1, 2, 4, 6, 8)]
