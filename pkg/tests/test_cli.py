import json

import numpy as np
import pytest

from polycert import cli
from polycert.config import ConfigError, RunConfig


def write_cfg(tmp_path, name="cfg.json", **overrides):
    cfg = {
        "plant": {"preset": "paper-sysV", "e1": -0.01, "e2": -0.005},
        "theorem": "1", "radius": 0.5, "lam": 1.0, "seed": 0,
        "out": str(tmp_path / "out"),
    }
    cfg.update(overrides)
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    return path


def test_config_rejects_unknown_keys():
    with pytest.raises(ConfigError):
        RunConfig.from_dict({"lambda_typo": 0.9})


def test_config_rejects_bad_lambda(tmp_path):
    path = write_cfg(tmp_path, lam=1.5)
    assert cli.main(["synth", "--config", str(path)]) == 1


def test_toml_config(tmp_path):
    path = tmp_path / "cfg.toml"
    path.write_text('theorem = "1"\nradius = 0.5\nlam = 1.0\nseed = 0\n'
                    f'out = "{tmp_path / "out"}"\n')
    assert cli.main(["synth", "--config", str(path)]) == 0


def test_synth_writes_result(tmp_path):
    path = write_cfg(tmp_path)
    assert cli.main(["synth", "--config", str(path)]) == 0
    payload = json.loads((tmp_path / "out" / "result.json").read_text())
    assert payload["status"] == "optimal"
    assert payload["certificate"] == "thm1"
    assert np.array(payload["K1"]).shape == (1, 3)
    assert payload["lambda"] == 1.0


def test_synth_infeasible_exit_code(tmp_path):
    path = write_cfg(tmp_path, theorem="4", h_w=1.0)
    assert cli.main(["synth", "--config", str(path)]) == 2


def test_verify_round_trip_identical_reports(tmp_path):
    path = write_cfg(tmp_path)
    assert cli.main(["synth", "--config", str(path)]) == 0
    assert cli.main(["verify", "--config", str(path)]) == 0
    first = (tmp_path / "out" / "report.json").read_bytes()
    assert cli.main(["verify", "--config", str(path)]) == 0
    assert (tmp_path / "out" / "report.json").read_bytes() == first
    report = json.loads(first)
    assert report["passed"] and report["samples"] == 2000


def test_simulate_writes_trajectories(tmp_path):
    path = write_cfg(tmp_path)
    assert cli.main(["synth", "--config", str(path)]) == 0
    assert cli.main(["simulate", "--config", str(path), "--steps", "30"]) == 0
    files = sorted((tmp_path / "out" / "trajectories").glob("vertex_*.csv"))
    assert len(files) == 8
    header = files[0].read_text().split("\n")[0]
    assert header == "t,x1,x2,x3,u1,V"


def test_rmax_command(tmp_path):
    path = write_cfg(tmp_path, bracket=[0.1, 1.0], bisect_tol=0.05)
    assert cli.main(["rmax", "--config", str(path)]) == 0
    payload = json.loads((tmp_path / "out" / "result.json").read_text())
    assert 0.45 <= payload["r_star"] <= 0.8


def test_sweep_command(tmp_path):
    path = write_cfg(tmp_path, sweep_which="e2", sweep_bracket=[0.0, 0.5],
                     sweep_tol=0.02)
    assert cli.main(["sweep", "--config", str(path)]) == 0
    rows = (tmp_path / "out" / "sweep.csv").read_text().strip().split("\n")
    assert rows[0] == "coefficient,feasible,objective"
    assert len(rows) > 2
    meta = json.loads((tmp_path / "out" / "sweep.json").read_text())
    assert meta["which"] == "e2"


def test_flag_overrides(tmp_path):
    path = write_cfg(tmp_path)
    out2 = tmp_path / "alt"
    assert cli.main(["synth", "--config", str(path), "--theorem", "3",
                     "--mode", "structured", "--out", str(out2)]) == 0
    payload = json.loads((out2 / "result.json").read_text())
    assert payload["certificate"] == "thm3" and payload["mode"] == "structured"
    assert len(payload["vertex_gains"]) == 8


def test_reproduce_light_matrix(tmp_path):
    cfgd = {
        "plant": {"preset": "paper-sysV"}, "seed": 0, "lam": 1.0,
        "out": str(tmp_path / "rep"),
        "reproduce_certificates": [["1", None]],
        "reproduce_studies": ["rmax"],
        "bracket": [0.1, 1.0], "bisect_tol": 0.05,
    }
    path = tmp_path / "rep.json"
    path.write_text(json.dumps(cfgd))
    assert cli.main(["reproduce", "--config", str(path)]) == 0
    summary = (tmp_path / "rep" / "summary.csv").read_text().strip().split("\n")
    header = summary[0].split(",")
    assert header[0] == "certificate"
    assert (tmp_path / "rep" / "summary.md").exists()
    row = dict(zip(header, summary[1].split(",")))
    assert row["certificate"] == "thm1"
    assert 0.45 <= float(row["r_measured"]) <= 0.8
