"""Configuration parsing and the command-line front end."""

import hashlib
import json

import pytest

from pmewaves.cli import main
from pmewaves.config import ConfigError, RunConfig, parse_config, serialize_config

MINIMAL = """
[params]
m = 2.0
c = 1.0
"""

SMALL_RUN = """
[flow]
cos = []
sin = []

[params]
m = 2.0
c = 1.0
K = 100
delta_schedule = [0.1]
L_schedule = [4]
amplitude_schedule = [0.0, 1.0]

[grid]
Ny = 8
Nx_schedule = [64]
"""


def test_minimal_config_defaults():
    cfg = parse_config(MINIMAL)
    assert cfg.K == 100.0
    assert cfg.delta_schedule == (1e-1, 1e-2, 1e-3, 1e-4)
    assert cfg.L_schedule == (8.0, 16.0, 32.0)
    assert cfg.Nx_schedule == (128, 256, 512)
    assert cfg.Ny == 32


def test_config_roundtrip():
    cfg = parse_config(SMALL_RUN)
    assert parse_config(serialize_config(cfg)) == cfg


def test_config_errors_name_the_line():
    with pytest.raises(ConfigError, match="line 3"):
        parse_config("[params]\nm = 2.0\nbogus = 1\n")
    with pytest.raises(ConfigError, match="unknown section"):
        parse_config("[nope]\nx = 1\n")
    with pytest.raises(ConfigError, match="m = 1"):
        parse_config("[params]\nm = 1.0\n")
    with pytest.raises(ConfigError, match="decreasing"):
        parse_config("[params]\nm = 2.0\ndelta_schedule = [0.1, 0.2]\n")
    with pytest.raises(ConfigError, match="c\\*"):
        parse_config("[flow]\ncos = [2.0]\n\n[params]\nm = 2.0\nc = 1.0\n")


def _write_cfg(tmp_path, text=SMALL_RUN):
    path = tmp_path / "run.cfg"
    path.write_text(text)
    return path


def test_cli_planar_and_solve(tmp_path):
    cfg = _write_cfg(tmp_path)
    out = tmp_path / "out"
    assert main(["planar", "--config", str(cfg), "--out", str(out)]) == 0
    assert (out / "barrier_plus.csv").exists()
    data = json.loads((out / "barrier_data.json").read_text())
    assert data["B"] > 1.0

    assert main(["solve", "--config", str(cfg), "--out", str(out)]) == 0
    assert (out / "field.csv").exists()
    report = json.loads((out / "solve_report.json").read_text())
    assert report["converged"]
    manifest = json.loads((out / "manifest.json").read_text())
    assert "field.csv" in manifest["artifacts"]


def test_cli_continue_resume_and_analyze(tmp_path):
    cfg = _write_cfg(tmp_path)
    out1 = tmp_path / "run1"
    assert main(["continue", "--config", str(cfg), "--out", str(out1)]) == 0
    assert (out1 / "stage_000.json").exists()
    assert (out1 / "stage_001.json").exists()

    # resuming from the first checkpoint reproduces the final field exactly
    out2 = tmp_path / "run2"
    assert main(["continue", "--config", str(cfg), "--out", str(out2),
                 "--resume", str(out1 / "stage_000.json")]) == 0
    h1 = hashlib.sha256((out1 / "field.csv").read_bytes()).hexdigest()
    h2 = hashlib.sha256((out2 / "field.csv").read_bytes()).hexdigest()
    assert h1 == h2

    # post-processing the stored field emits the analysis artifacts
    assert main(["analyze", "--config", str(cfg), "--out", str(out1)]) == 0
    for name in ("boundary.csv", "oscillation.csv", "expansion.json",
                 "report.json"):
        assert (out1 / name).exists()
    rep = json.loads((out1 / "report.json").read_text())
    assert rep["monotonicity"]["min_px"] >= -1e-8


def test_cli_analyze_missing_field_fails(tmp_path):
    cfg = _write_cfg(tmp_path)
    out = tmp_path / "empty"
    assert main(["analyze", "--config", str(cfg), "--out", str(out)]) == 1


def test_cli_bad_config_exits_2(tmp_path):
    bad = tmp_path / "bad.cfg"
    bad.write_text("[params]\nm = 1.0\n")
    with pytest.raises(SystemExit) as exc:
        main(["solve", "--config", str(bad)])
    assert exc.value.code == 2
