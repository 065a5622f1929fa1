import json

import pytest

from phasesched.cli import main
from phasesched.workload import save_workload

from conftest import E, I, job


def test_bounds_csv(capsys):
    assert main(["bounds"]) == 0
    out = capsys.readouterr().out.splitlines()
    assert out[0].startswith("bound,alpha,beta")
    assert out[1].startswith("fractional-lcfs,2.0,")
    assert "16.66666666666666" in out[2]


def test_bounds_find_beta_json(capsys):
    assert main(["bounds", "--find-beta", "--alpha", "3", "--format", "json"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["rows"][0]["beta"] == pytest.approx(0.4102)
    assert doc["rows"][0]["feasible"] is True


def test_simulate_from_config(tmp_path, capsys):
    cfg = {"policies": ["flcfs", "pa-fcfs"], "workload": {"arrival_rate": 1, "horizon_slots": 30},
           "servers": 10, "replications": 2}
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))
    out = tmp_path / "out.csv"
    assert main(["simulate", "--config", str(path), "--seed", "5", "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert len(lines) == 3
    err = capsys.readouterr().err
    assert "replications" in err
    # same seed, same bytes
    out2 = tmp_path / "out2.csv"
    assert main(["simulate", "--config", str(path), "--seed", "5", "--out", str(out2)]) == 0
    assert out.read_bytes() == out2.read_bytes()


def test_sweep_flags(capsys):
    rc = main(["sweep", "--policy", "flcfs", "--dimension", "arrival_rate", "--values", "1,2",
               "--horizon", "20", "--replications", "2", "--format", "json"])
    assert rc == 0
    rows = json.loads(capsys.readouterr().out)["rows"]
    assert [r["arrival_rate"] for r in rows] == [1.0, 2.0]


def test_verify_passes(capsys):
    assert main(["verify", "--jobs", "6", "--seed", "2"]) == 0
    out = capsys.readouterr().out
    assert out.startswith("interval_start,interval_end,side,drift,bound,margin,applicable")
    assert main(["verify", "--policy", "pa-equi", "--jobs", "6", "--seed", "2", "--comparison", "equi"]) == 0


def test_oracle_command(tmp_path, capsys):
    path = tmp_path / "w.json"
    save_workload([job(0, 0, (E, 4))], path)
    rc = main(["oracle", "--workload", str(path), "--servers", "4", "--grid", "1", "--dt", "0.25", "--policy", "equi"])
    assert rc == 0
    header, line = capsys.readouterr().out.splitlines()
    row = dict(zip(header.split(","), line.split(",")))
    assert float(row["ratio"]) == pytest.approx(1.0)
    for key in ("coarse", "refined", "slack", "lower_bound", "flow_time"):
        float(row[key])


def test_exit_codes(tmp_path, capsys):
    assert main(["simulate", "--policy", "srpt"]) == 1
    assert main(["bogus"]) == 1
    assert main(["simulate", "--config", str(tmp_path / "none.json")]) == 1
    path = tmp_path / "w.json"
    save_workload([job(i, 0, (E, 1)) for i in range(4)], path)
    assert main(["oracle", "--workload", str(path)]) == 1
    capsys.readouterr()
