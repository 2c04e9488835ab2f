import csv
import json

import pytest

from infoevo.cli import geodesic_check, main
from infoevo.errors import ConfigError


def run_cli(argv):
    return main(argv)


FAST_RUN = [
    "--problem",
    "onemax",
    "--bits",
    "16",
    "--budget",
    "400",
    "--seed",
    "5",
    "--init-population",
    "30",
    "--subpop-size",
    "10",
    "--generations",
    "2",
    "--ray-count",
    "3",
    "--resolution",
    "8",
    "--refinement-levels",
    "1",
]


def read_trace(path):
    lines = path.read_text().splitlines()
    header = json.loads(lines[0])
    rows = [json.loads(line) for line in lines[1:]]
    return header, rows


# --- run ---


def test_run_writes_contract_files(tmp_path):
    out = tmp_path / "out"
    code = run_cli(["run", "--out", str(out)] + FAST_RUN)
    assert code == 0
    record = json.loads((out / "run.json").read_text())
    assert record["schema"] == "run.v1"
    assert record["mode"] == "info_evo"
    assert record["seed"] == 5
    assert record["success"]
    assert record["best_score"] == 16.0
    assert record["eval_count"] <= 400
    assert record["trace_file"] == "trace.jsonl"
    assert record["config"]["problem"] == "onemax"

    header, rows = read_trace(out / "trace.jsonl")
    assert header == {"schema": "trace.v1"}
    assert len(rows) == record["eval_count"]
    assert [r["eval_order"] for r in rows] == list(range(len(rows)))
    assert max(r["score"] for r in rows) == record["best_score"]


def test_run_trace_byte_identical(tmp_path):
    out_a, out_b = tmp_path / "a", tmp_path / "b"
    assert run_cli(["run", "--out", str(out_a)] + FAST_RUN) == 0
    assert run_cli(["run", "--out", str(out_b)] + FAST_RUN) == 0
    assert (out_a / "trace.jsonl").read_bytes() == (out_b / "trace.jsonl").read_bytes()


def test_run_paired_mode(tmp_path):
    out = tmp_path / "out"
    code = run_cli(["run", "--mode", "paired", "--out", str(out)] + FAST_RUN)
    assert code == 0
    payload = json.loads((out / "run.json").read_text())
    assert payload["mode"] == "paired"
    assert set(payload["runs"]) == {"info_evo", "baseline"}
    for mode in ("info_evo", "baseline"):
        assert (out / f"trace_{mode}.jsonl").exists()
    # the baseline never filters
    assert payload["runs"]["baseline"]["candidates_skipped"] == 0


def test_run_missing_seed_exits_2(tmp_path):
    code = run_cli(["run", "--problem", "onemax", "--out", str(tmp_path)])
    assert code == 2


def test_run_unknown_problem_exits_2(tmp_path):
    code = run_cli(
        ["run", "--problem", "banana", "--seed", "1", "--out", str(tmp_path)]
    )
    assert code == 2


def test_run_bad_mode_exits_2(tmp_path):
    code = run_cli(
        ["run", "--mode", "warp", "--seed", "1", "--out", str(tmp_path)]
    )
    assert code == 2


def test_run_config_file_merged_with_flag_override(tmp_path):
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(
        json.dumps(
            {
                "problem": "onemax",
                "problem_params": {"bits": 12},
                "budget": 300,
                "seed": 9,
                "evolution": {
                    "subpop_size": 10,
                    "generations_per_round": 2,
                    "init_population": 25,
                },
                "step": {"ray_count": 3, "grid_resolution": 8, "refinement_levels": 1},
            }
        )
    )
    out = tmp_path / "out"
    # flag overrides the config file budget
    code = run_cli(
        ["run", "--config", str(cfg_path), "--budget", "200", "--out", str(out)]
    )
    assert code == 0
    record = json.loads((out / "run.json").read_text())
    assert record["config"]["budget"] == 200
    assert record["config"]["problem_params"]["bits"] == 12
    assert record["seed"] == 9


def test_run_missing_config_file_exits_2(tmp_path):
    code = run_cli(
        ["run", "--config", str(tmp_path / "nope.json"), "--seed", "1"]
    )
    assert code == 2


# --- compare ---


def test_compare_csv_row_accounting(tmp_path):
    out = tmp_path / "out"
    code = run_cli(
        ["compare", "--repeats", "2", "--out", str(out)] + FAST_RUN
    )
    assert code == 0
    with open(out / "compare.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    # 2 repeats x 2 modes + 2 median rows
    assert len(rows) == 6
    data_rows = [r for r in rows if r["seed"] != "median"]
    assert len(data_rows) == 4
    assert {r["mode"] for r in data_rows} == {"info_evo", "baseline"}
    assert {r["seed"] for r in data_rows} == {"5", "6"}
    median_rows = [r for r in rows if r["seed"] == "median"]
    assert [r["mode"] for r in median_rows] == ["info_evo", "baseline"]
    for r in data_rows:
        assert 1 <= int(r["evals_to_target"]) <= 400


def test_compare_invalid_repeats_exits_2(tmp_path):
    code = run_cli(
        ["compare", "--repeats", "0", "--out", str(tmp_path)] + FAST_RUN
    )
    assert code == 2


# --- geodesic check ---


def test_geodesic_check_function_accuracy():
    max_err, results = geodesic_check(
        3, trials=5, resolution=32, refinement_levels=3, seed=1, verbose=False
    )
    assert len(results) == 5
    assert max_err <= 0.02
    for exact, refined in results:
        assert 0.2 <= exact <= 0.8
        assert abs(refined - exact) / exact <= 0.02


def test_geodesic_check_validation():
    with pytest.raises(ConfigError):
        geodesic_check(2, trials=1, resolution=8)
    with pytest.raises(ConfigError):
        geodesic_check(3, trials=0, resolution=8)


def test_geodesic_check_cli_exit_zero(capsys):
    code = run_cli(
        [
            "geodesic-check",
            "--n",
            "3",
            "--trials",
            "3",
            "--resolution",
            "16",
            "--quiet",
        ]
    )
    assert code == 0
    out = capsys.readouterr().out
    assert "max relative error" in out


# --- list-problems ---


def test_list_problems(capsys):
    assert run_cli(["list-problems"]) == 0
    out = capsys.readouterr().out.split()
    assert out == ["onemax", "trap5", "sphere", "rosenbrock", "symreg"]
