import csv
import io
import json
import subprocess
import sys

import pytest

from compassbell import config as cfgmod
from compassbell.cli import cli_dispatch


def run(argv, tmp_path, cfg=None, fmt="csv"):
    args = list(argv)
    if cfg is not None:
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps(cfg))
        args += ["--config", str(path)]
    out = tmp_path / f"out.{fmt}"
    args += ["--out", str(out), "--format", fmt]
    code = cli_dispatch(args)
    return code, out.read_text() if out.exists() else None


def test_table1_csv(tmp_path):
    code, text = run(["table1"], tmp_path)
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(text)))
    assert len(rows) == 8
    assert set(rows[0]) == {"x", "theta0", "theta_dot0", "theta_wrapped"}
    cell = next(r for r in rows if float(r["x"]) == 0.232 and float(r["theta_dot0"]) == 0.0)
    assert float(cell["theta_wrapped"]) == pytest.approx(1.10, abs=0.03)


def test_bell_static_csv(tmp_path):
    code, text = run(["bell-static"], tmp_path)
    assert code == 0
    lines = text.strip().splitlines()
    assert lines[0] == "run,setting_I,setting_II,M"
    assert lines[-1].startswith("S,")
    assert float(lines[-1].split(",")[1]) in (-2.0, 2.0)


def test_bell_drift_json_envelope(tmp_path):
    code, text = run(["bell-drift"], tmp_path, fmt="json")
    assert code == 0
    doc = json.loads(text)
    cfgmod.validate(doc, cfgmod.RESULT_SCHEMA)
    assert doc["command"] == "bell-drift"
    assert doc["result"]["S"] == 4.0


def test_sep_cos_json(tmp_path):
    code, text = run(["sep-cos"], tmp_path, fmt="json")
    assert code == 0
    res = json.loads(text)["result"]
    assert len(res["pairs"]) == 16
    assert abs(res["chsh"]["S"]) <= 4


def test_traj_and_strobe(tmp_path):
    cfg = {"traj": {"t_end": 10.0, "sample_every": 1000}}
    code, text = run(["traj"], tmp_path, cfg)
    assert code == 0
    lines = text.strip().splitlines()
    assert lines[0] == "t,theta,theta_dot,theta_wrapped"
    assert len(lines) == 1 + 11
    code, text = run(["strobe"], tmp_path, {"strobe": {"n_transient": 5, "n_keep": 3}})
    assert code == 0
    assert len(text.strip().splitlines()) == 4


def test_lyap_and_bifurcate_small(tmp_path):
    cfg = {"lyap": {"x_values": [0.17], "transient": 62.83, "total": 628.3}}
    code, text = run(["lyap"], tmp_path, cfg)
    assert code == 0
    assert float(text.strip().splitlines()[1].split(",")[1]) < 0
    cfg = {"bifurcate": {"n_x": 2, "x_lo": 0.16, "x_hi": 0.17, "n_transient": 10, "n_keep": 4}}
    code, text = run(["bifurcate"], tmp_path, cfg)
    assert code == 0
    assert len(text.strip().splitlines()) == 1 + 2 * 4


def test_same_seed_identical_output(tmp_path):
    cfg = {"bell_random": {"n_pairs": 200, "lambda_L": [[0.6, 0.0], [0.6, 0.001]]}}
    _, first = run(["bell-random", "--seed", "5"], tmp_path, cfg, fmt="json")
    _, second = run(["bell-random", "--seed", "5"], tmp_path, cfg, fmt="json")
    _, other = run(["bell-random", "--seed", "6"], tmp_path, cfg, fmt="json")
    assert first == second
    assert first != other


@pytest.mark.parametrize("argv", [["bogus"], ["table1", "--format", "xml"], ["table1", "--seed", "abc"]])
def test_usage_errors_exit_1(argv, capsys):
    assert cli_dispatch(argv) == 1


@pytest.mark.parametrize("cfg", [
    {"model": {"alpha": 0.174, "gamma": 1.0}},
    {"dichotomizer": {"delta": -0.1}},
    {"integrator": {"method": "euler"}},
    {"synth_cos": {"grid": [2.0]}},
])
def test_bad_config_exit_1(cfg, tmp_path):
    code, _ = run(["table1"], tmp_path, cfg)
    assert code == 1


def test_unreadable_config_exit_1(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert cli_dispatch(["table1", "--config", str(bad)]) == 1
    assert cli_dispatch(["table1", "--config", str(tmp_path / "missing.json")]) == 1


def test_domain_error_in_handler_exit_1(tmp_path):
    cfg = {"synth_cos": {"x_lo": 0.23, "x_hi": 0.22}}
    code, _ = run(["synth-cos"], tmp_path, cfg)
    assert code == 1


def test_synth_in_regular_window_exit_2(tmp_path):
    cfg = {"synth_cos": {"x_lo": 0.16, "x_hi": 0.161, "grid": [0.0, 1.5707963267948966],
                         "lambda_L": [[0.6, 0.0]], "t_m_cap": None}}
    code, text = run(["synth-cos"], tmp_path, cfg, fmt="json")
    assert code == 2
    assert json.loads(text)["result"]["failures"]


def test_empty_bin_exit_2(tmp_path):
    code, text = run(["bell-random"], tmp_path, {"bell_random": {"n_pairs": 1}})
    assert code == 2
    assert text is None


def test_blowup_exit_2(tmp_path):
    cfg = {"integrator": {"step": 50.0}, "traj": {"t_end": 1e4}}
    code, _ = run(["traj"], tmp_path, cfg)
    assert code == 2


def test_module_entry_point_stdout():
    proc = subprocess.run([sys.executable, "-m", "compassbell", "sep-cos"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert proc.stdout.startswith("a,b,target_cos,discretized,M,abs_err")
