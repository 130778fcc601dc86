"""CLI: subcommands, file formats, determinism, exit codes."""

import json
import subprocess
import sys

import pytest

RUN = [sys.executable, "-m", "ergolab.cli"]


def run_cli(*args, check=True):
    proc = subprocess.run(
        RUN + list(args), capture_output=True, text=True
    )
    if check and proc.returncode != 0:
        raise AssertionError(
            f"exit {proc.returncode}: {proc.stdout}\n{proc.stderr}"
        )
    return proc


def test_construct_preset_json():
    proc = run_cli("construct", "--preset", "chacon", "--stages", "4")
    data = json.loads(proc.stdout)
    assert [row["height"] for row in data["stages"]] == [1, 4, 13, 40, 121]
    assert data["stages"][1]["tower_mass"] == "8/9"


def test_construct_recipe_file(tmp_path):
    recipe = tmp_path / "c.txt"
    recipe.write_text(
        "# three-column recipe\n"
        "h1 = 1\n"
        'w1 = "2/3"\n'
        "stages = [[3, [0, 1, 0]], [3, [0, 1, 0]]]\n"
        "mass_cap = 1\n"
    )
    proc = run_cli("construct", "--recipe", str(recipe), "--format", "csv")
    lines = proc.stdout.strip().splitlines()
    assert lines[0] == "stage,height,width,tower_mass"
    assert lines[-1].startswith("3,13,")


def test_construct_rejects_unknown_key(tmp_path):
    recipe = tmp_path / "c.txt"
    recipe.write_text("h1 = 1\nw1 = 1\nstages = [[2, [0, 0]]]\nbogus = 3\n")
    proc = run_cli("construct", "--recipe", str(recipe), check=False)
    assert proc.returncode == 2
    assert json.loads(proc.stdout)["error"] == "ConfigError"


def test_correlate_csv(tmp_path):
    sets = tmp_path / "sets.json"
    sets.write_text(json.dumps([
        {"stage": 3, "levels": [0, 2, 5]},
        {"stage": 3, "levels": [0, 2, 5]},
    ]))
    proc = run_cli(
        "correlate", "--preset", "chacon", "--stages", "6",
        "--sets", str(sets), "--shifts", "0,0;0,4", "--stage", "5",
        "--format", "csv",
    )
    lines = proc.stdout.strip().splitlines()
    assert lines[0] == "k0,k1,lower,upper,eval_stage"
    row0 = lines[1].split(",")
    assert row0[:2] == ["0", "0"] and row0[2] == row0[3]  # exact at shift 0


def test_correlate_budget_exit_code(tmp_path):
    sets = tmp_path / "sets.json"
    sets.write_text(json.dumps([{"stage": 2, "levels": [0]}] * 2))
    proc = run_cli(
        "correlate", "--preset", "chacon", "--stages", "9",
        "--sets", str(sets), "--shifts", "0,300", "--budget-levels", "100",
        check=False,
    )
    assert proc.returncode == 4


def test_unknown_preset_is_precondition_error(tmp_path):
    sets = tmp_path / "sets.json"
    sets.write_text(json.dumps([{"stage": 1, "levels": [0]}]))
    proc = run_cli(
        "correlate", "--preset", "nope", "--sets", str(sets), "--shifts", "0",
        check=False,
    )
    assert proc.returncode == 3
    assert json.loads(proc.stdout)["error"] == "UnknownPreset"


def test_weak_limit_scan():
    proc = run_cli(
        "weak-limit", "--preset", "chacon", "--stages", "9",
        "--js", "4..5", "--family-stage", "3", "--stage", "9",
    )
    data = json.loads(proc.stdout)
    assert [row["j"] for row in data["scan"]] == [4, 5]
    assert all(len(row["candidates"]) == 3 for row in data["scan"])


def test_mixing_scan_cli(tmp_path):
    sets = tmp_path / "sets.json"
    sets.write_text(json.dumps([{"stage": 4, "levels": list(range(18))}] * 3))
    proc = run_cli(
        "mixing-scan", "--preset", "staircase", "--stages", "6",
        "--sets", str(sets), "--h", "12", "--eps", "1/20", "--stage", "6",
    )
    data = json.loads(proc.stdout)
    assert data["eval_stage"] == 6
    assert data["pairs_scanned"] >= len(data["offenders"])


def test_ledrappier_cli_five_shift():
    proc = run_cli(
        "ledrappier", "--n", "16", "--cyl", "(0,0)=0",
        "--shifts", "(4,0);(-4,0);(0,4);(0,-4)",
    )
    data = json.loads(proc.stdout)
    assert data["measure"] == "1/16"
    assert data["product"] == "1/32"
    assert len(data["dependencies"]) == 1


def test_cascade_cli(tmp_path):
    cocycle = tmp_path / "f.csv"
    cocycle.write_text(
        "level,value\n0,1\n1,1\n2,-1\n3,-1\n4,1\n5,1\n6,-1\n7,-1\n"
    )
    proc = run_cli(
        "cascade", "--base", "odometer:2", "--depth", "16",
        "--cocycle", str(cocycle), "--cocycle-stage", "3",
        "--samples", "64", "--length", "4096", "--min-returns", "10",
        "--seed", "7",
    )
    data = json.loads(proc.stdout)
    assert data["fraction"] == "1"
    assert data["included"] + data["excluded"] == 64


def test_cascade_rejects_bad_cocycle(tmp_path):
    cocycle = tmp_path / "f.csv"
    cocycle.write_text("level,value\n0,1\n2,-1\n")  # gap in levels
    proc = run_cli(
        "cascade", "--cocycle", str(cocycle), "--cocycle-stage", "1",
        check=False,
    )
    assert proc.returncode == 2


def test_asym5_asymmetry_table():
    proc = run_cli("asym5-asymmetry", "--stages", "6..6")
    data = json.loads(proc.stdout)
    row = data["table"][0]
    assert row["i"] == 6 and row["eval_stage"] == 10
    assert row["forward_ratio_lower"] == "4816089/4859375"
    assert row["backward_upper"] == "43452/4882811"
    # deeper stages need an explicit budget
    proc = run_cli("asym5-asymmetry", "--stages", "7..7", check=False)
    assert proc.returncode == 4


def test_props_subcommand():
    proc = run_cli("props", "--seed", "1")
    data = json.loads(proc.stdout)
    assert data["all_pass"] is True


def test_determinism_identical_bytes(tmp_path):
    sets = tmp_path / "sets.json"
    sets.write_text(json.dumps([{"stage": 3, "levels": [0, 4]}] * 2))
    args = (
        "correlate", "--preset", "chacon", "--stages", "7",
        "--sets", str(sets), "--shifts", "0,7", "--stage", "6",
    )
    first = run_cli(*args).stdout
    second = run_cli(*args).stdout
    assert first == second
    p1 = run_cli("props", "--seed", "3").stdout
    p2 = run_cli("props", "--seed", "3").stdout
    assert p1 == p2
