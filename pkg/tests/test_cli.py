"""End-to-end command tests: JSON reports, artifacts, and exit codes."""

import json
import math
import os

import pytest

from locmech.cli import CSV_COLUMNS, run

TAU = math.tau


def invoke(capsys, *argv):
    code = run(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def out_json(capsys, *argv):
    code, out, _ = invoke(capsys, *argv)
    return code, json.loads(out)


def test_work_reports_loop_circulation(capsys):
    code, doc = out_json(
        capsys, "work", "--field", "vortex", "--path", "circle:0,0,1",
        "--deterministic",
    )
    assert code == 0
    assert doc["work"] == pytest.approx(TAU, abs=1e-7)
    assert "generated_at" not in doc


def test_winding_command(capsys):
    code, doc = out_json(
        capsys, "winding", "--path", "circle:0,0,1.5,-2", "--deterministic"
    )
    assert code == 0
    assert doc["winding"] == -2
    code, doc = out_json(
        capsys, "winding",
        "--path", "poly:1,1;-1,1;-1,-1;1,-1;1,1",
        "--about", "0,0", "--deterministic",
    )
    assert doc["winding"] == 1


def test_forms_table_is_deterministic(capsys):
    code1, out1, _ = invoke(capsys, "forms-table", "--deterministic")
    code2, out2, _ = invoke(capsys, "forms-table", "--deterministic")
    assert code1 == code2 == 0
    assert out1 == out2
    doc = json.loads(out1)
    assert doc["star"]["dx"] == "dy^dz"
    assert doc["star"]["dx^dy^dz"] == "1"


def test_check_closed_exit_codes(capsys):
    code, doc = out_json(
        capsys, "check-closed", "--field", "vortex", "--deterministic"
    )
    assert code == 0 and doc["closed"]
    code, doc = out_json(
        capsys, "check-closed", "--field", "0;x", "--deterministic"
    )
    assert code == 1 and not doc["closed"]
    assert doc["max_residual"] == pytest.approx(1.0, abs=1e-6)


def test_classify_command(capsys):
    code, doc = out_json(
        capsys, "classify", "--field", "vortex", "--deterministic"
    )
    assert code == 0
    assert doc["classification"] == "closed-not-exact"


def test_cocycle_report(capsys):
    code, doc = out_json(
        capsys, "cocycle", "--field", "vortex", "--deterministic"
    )
    assert code == 0
    assert doc["entries"]["1-2"] == pytest.approx(-math.pi / 2, abs=1e-9)
    assert doc["entries"]["1-4"] == pytest.approx(math.pi / 2, abs=1e-9)
    assert not doc["exact"]
    assert doc["offsets"] is None
    assert len(doc["periods"]) == 1
    assert doc["periods"][0]["period"] == pytest.approx(-TAU, abs=1e-8)


def test_potentials_evaluation(capsys):
    code, doc = out_json(
        capsys, "potentials", "--field", "vortex",
        "--eval", "2,0@1", "--deterministic",
    )
    assert code == 0
    assert doc["charts"] == [1, 2, 3, 4]
    entry = doc["evaluations"][0]
    assert entry["chart"] == 1
    assert entry["value"] == pytest.approx(math.pi / 4, abs=1e-9)


def test_bundle_holonomy(capsys):
    code, doc = out_json(
        capsys, "bundle", "--field", "vortex",
        "--cycle", "1,2,3,4,1", "--deterministic",
    )
    assert code == 0
    assert doc["holonomies"]["1-2-3-4-1"] == pytest.approx(
        math.exp(-TAU), rel=1e-9
    )
    assert not doc["trivial"]
    assert len(doc["t"]) == 4


def simulate_args(tmp_path, name="run.csv", extra=()):
    out = os.path.join(tmp_path, name)
    return out, [
        "simulate", "--field", "vortex", "--q0", "1,0", "--p0", "0,1",
        "--h", "1e-2", "--T", "1", "--out", out, "--deterministic", *extra,
    ]


def test_simulate_artifacts(tmp_path, capsys):
    svg = os.path.join(tmp_path, "run.svg")
    out, argv = simulate_args(str(tmp_path), extra=["--emit-svg", svg])
    code, doc = out_json(capsys, *argv)
    assert code == 0
    assert doc["status"] == "completed"
    assert doc["states"] == 101

    with open(out) as fh:
        lines = fh.read().splitlines()
    assert lines[0] == ",".join(CSV_COLUMNS)
    assert len(lines) == 1 + 101
    first = lines[1].split(",")
    assert first[0] == "0.0"
    assert first[1] == "1.0"
    assert first[5] == "1"

    sidecar = os.path.join(tmp_path, "run.transitions.json")
    with open(sidecar) as fh:
        side = json.load(fh)
    assert side["status"] == "completed"
    assert isinstance(side["transitions"], list)

    with open(svg) as fh:
        body = fh.read()
    assert body.startswith("<svg ")
    assert "<polyline" in body and "<circle" in body


def test_simulate_is_byte_reproducible(tmp_path, capsys):
    out1, argv1 = simulate_args(str(tmp_path), "a.csv")
    out2, argv2 = simulate_args(str(tmp_path), "b.csv")
    code1, stdout1, _ = invoke(capsys, *argv1)
    code2, stdout2, _ = invoke(capsys, *argv2)
    assert code1 == code2 == 0
    assert stdout1.replace("a.csv", "x") == stdout2.replace("b.csv", "x")
    with open(out1, "rb") as fh:
        bytes1 = fh.read()
    with open(out2, "rb") as fh:
        bytes2 = fh.read()
    assert bytes1 == bytes2


def test_simulate_abort_exits_2_with_partial_csv(tmp_path, capsys):
    out = os.path.join(tmp_path, "abort.csv")
    code, stdout, err = invoke(
        capsys, "simulate", "--field", "vortex", "--q0", "0.002,0",
        "--p0=-1,0", "--h", "1e-5", "--T", "0.01",
        "--out", out, "--deterministic",
    )
    assert code == 2
    doc = json.loads(stdout)
    assert doc["status"] == "aborted-singularity"
    assert "r_min" in err
    with open(out) as fh:
        rows = fh.read().splitlines()
    assert rows[0] == ",".join(CSV_COLUMNS)
    assert 2 < len(rows) < 1002


def test_expression_error_exits_3(capsys):
    code, _, err = invoke(capsys, "work", "--field", "x^;y",
                          "--path", "circle:0,0,1")
    assert code == 3
    assert "expression" in err


def test_validation_error_exits_1(capsys):
    code, _, err = invoke(capsys, "simulate", "--field", "vortex")
    assert code == 1
    code, _, err = invoke(capsys, "work", "--field", "vortex",
                          "--path", "spiral:1,2")
    assert code == 1


def test_config_merging_and_flag_override(tmp_path, capsys):
    cfg_path = os.path.join(tmp_path, "scenario.json")
    out = os.path.join(tmp_path, "cfg.csv")
    with open(cfg_path, "w") as fh:
        json.dump({
            "field": "vortex",
            "simulate": {"q0": "1,0", "p0": "0,1", "h": 1e-2, "T": 5.0},
            "outputs": {"out": out},
        }, fh)
    code, doc = out_json(
        capsys, "simulate", "--config", cfg_path, "--T", "1",
        "--deterministic",
    )
    assert code == 0
    # The flag wins over the config block.
    assert doc["states"] == 101
    assert os.path.exists(out)


def test_unknown_config_keys_are_rejected(tmp_path, capsys):
    cfg_path = os.path.join(tmp_path, "bad.json")
    with open(cfg_path, "w") as fh:
        json.dump({"field": "vortex", "stepsize": 0.1}, fh)
    code, _, err = invoke(capsys, "classify", "--config", cfg_path)
    assert code == 1
    assert "stepsize" in err


def test_sweep_runs_every_entry(tmp_path, capsys):
    cfg_path = os.path.join(tmp_path, "sweep.json")
    with open(cfg_path, "w") as fh:
        json.dump({
            "field": "vortex",
            "simulate": {"q0": "1,0", "p0": "0,1", "h": 1e-2},
            "sweep": [
                {"simulate": {"T": 0.5}},
                {"simulate": {"T": 1.0}},
            ],
        }, fh)
    code, doc = out_json(
        capsys, "simulate", "--config", cfg_path, "--deterministic"
    )
    assert code == 0
    assert [s["states"] for s in doc["sweep"]] == [51, 101]
    assert all(s["status"] == "completed" for s in doc["sweep"])


def test_lift_round_trip(tmp_path, capsys):
    out, argv = simulate_args(str(tmp_path))
    invoke(capsys, *argv)
    lifted = os.path.join(tmp_path, "lift.csv")
    code, doc = out_json(
        capsys, "lift", "--traj", out, "--out", lifted, "--deterministic"
    )
    assert code == 0
    assert doc["states"] == 101
    assert doc["sheet_initial"] == 0
    with open(lifted) as fh:
        rows = fh.read().splitlines()
    assert rows[0] == "t,u,v,sheet"
    assert len(rows) == 1 + 101
    # u = log r = 0 at the start point (1, 0).
    assert rows[1].split(",")[1] == "0.0"


def test_log_continue_command(capsys):
    code, doc = out_json(
        capsys, "log-continue", "--from", "1,0", "--sheet", "0",
        "--path", "circle:0,0,1,3", "--deterministic",
    )
    assert code == 0
    assert doc["sheet"] == 3
    assert doc["value"][0] == pytest.approx(0.0, abs=1e-12)
    assert doc["value"][1] == pytest.approx(3 * TAU, abs=1e-9)


def test_verify_single_check(capsys):
    code, out, _ = invoke(capsys, "verify", "--only", "1", "--deterministic")
    assert code == 0
    assert "[ 1] PASS" in out


def test_no_command_prints_usage(capsys):
    code, _, err = invoke(capsys)
    assert code == 1
    assert "usage" in err
