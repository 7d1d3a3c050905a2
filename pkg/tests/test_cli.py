"""CLI harness: subcommands, exit codes, determinism, file outputs."""

import csv
import json
from pathlib import Path

import pytest

from ffip.cli import load_config, main

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def run(*argv):
    return main(list(argv))


def small_config(tmp_path, **overrides):
    cfg = {
        "mxu": {"x": 8, "y": 8, "variant": "ffip"},
        "verify": {"trials": 25, "m_max": 6, "n_max": 6, "k_max": 8},
        "simulate": {"rows": 256, "k": 16, "n": 8},
        "tile_check": {"trials": 4, "dim_max": 8, "kernel_max": 3,
                       "simulator_trials": 1},
        "bench": {"m": 32, "k": 16, "n": 16, "sim_rows": 32,
                  "sim_x": 8, "sim_y": 8, "repeats": 1},
    }
    for key, val in overrides.items():
        cfg.setdefault(key, {}).update(val)
    path = tmp_path / "config.json"
    path.write_text(json.dumps(cfg))
    return str(path)


def test_verify_passes_and_is_deterministic(tmp_path):
    cfg = small_config(tmp_path)
    out1, out2 = tmp_path / "r1", tmp_path / "r2"
    assert run("--config", cfg, "--seed", "7", "--out", str(out1),
               "verify") == 0
    assert run("--config", cfg, "--seed", "7", "--out", str(out2),
               "verify") == 0
    b1 = (out1 / "verify_report.txt").read_bytes()
    assert b1 == (out2 / "verify_report.txt").read_bytes()
    assert b"ALL SUITES PASSED" in b1


def test_verify_odd_k_without_padding_fails(tmp_path):
    cfg = small_config(tmp_path,
                       verify={"trials": 5, "k_max": 1, "pad_odd_k": False})
    out = tmp_path / "out"
    assert run("--config", cfg, "--out", str(out), "verify") == 1
    text = (out / "verify_report.txt").read_text()
    assert "FAIL" in text and "odd K" in text


def test_simulate_writes_trace(tmp_path, capsys):
    cfg = small_config(tmp_path)
    out = tmp_path / "sim"
    assert run("--config", cfg, "--seed", "3", "--out", str(out),
               "simulate") == 0
    printed = capsys.readouterr().out
    assert "latency" in printed and "roof" in printed
    with open(out / "trace.csv") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["k_tile", "n_tile", "cycle", "busy_multipliers"]
    assert len(rows) > 1


def test_tile_check(tmp_path):
    cfg = small_config(tmp_path)
    out = tmp_path / "tiles"
    assert run("--config", cfg, "--seed", "1", "--out", str(out),
               "tile-check") == 0
    with open(out / "addresses.csv") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["index", "address"]
    plan = json.loads((out / "plan.json").read_text())
    n_addresses = 1
    for v in plan["extents"].values():
        n_addresses *= v
    assert len(rows) - 1 == n_addresses


def test_cost_report_matches_recorded_tables(tmp_path):
    out = tmp_path / "cost"
    assert run("--config", str(CONFIGS / "resnet50.json"),
               "--out", str(out), "cost-report") == 0
    with open(out / "cost_report.csv") as fh:
        rows = {r["model"]: r for r in csv.DictReader(fh)}
    r64 = rows["resnet50-64x64"]
    assert abs(float(r64["gops_per_multiplier"]) - 1.180) / 1.180 < 0.005
    assert abs(float(r64["ops_per_multiplier_per_cycle"]) - 3.042) / 3.042 < 0.005
    r32 = rows["resnet50-32x32"]
    assert abs(float(r32["gops_per_multiplier"]) - 1.053) / 1.053 < 0.005
    assert abs(float(r32["ops_per_multiplier_per_cycle"]) - 3.042) / 3.042 < 0.005
    with open(out / "register_sweep.csv") as fh:
        sweep = list(csv.DictReader(fh))
    assert len(sweep) == 16 * 2
    for row in sweep:
        w, d = int(row["w"]), int(row["d"])
        assert (int(row["fip_extra_regs_bits"]) - int(row["ffip_bits"])
                == 2 * w - 2)
        assert int(row["ffip_bits"]) - int(row["fip_bits"]) == 2 * d + 2
    assert (out / "cost_report.md").exists()


def test_cost_report_requires_device(tmp_path):
    path = tmp_path / "nodev.json"
    path.write_text(json.dumps({"device": None}))
    assert run("--config", str(path), "--out", str(tmp_path / "o"),
               "cost-report") == 1


def test_bench_writes_csv(tmp_path):
    cfg = small_config(tmp_path)
    out = tmp_path / "bench"
    assert run("--config", cfg, "--out", str(out), "bench") == 0
    with open(out / "bench.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert {r["task"] for r in rows} >= {"gemm_baseline", "simulate_tile"}


def test_variant_flag_and_bad_config(tmp_path):
    cfg = small_config(tmp_path)
    assert run("--config", cfg, "--variant", "baseline",
               "--out", str(tmp_path / "v"), "simulate") == 0
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(SystemExit):
        run("--config", str(bad), "verify")
    unknown = tmp_path / "unknown.json"
    unknown.write_text(json.dumps({"mxu": {"bogus_key": 1}}))
    with pytest.raises(SystemExit):
        run("--config", str(unknown), "verify")


def test_example_configs_load():
    for name in ("default.json", "alexnet.json", "resnet50.json"):
        cfg = load_config(str(CONFIGS / name))
        assert cfg["mxu"]["x"] % 4 == 0
