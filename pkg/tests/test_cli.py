import json
import subprocess
import sys

import pytest

from qsp.cli import main

A2_REVERSAL = {
    "gcm": {"matrix": [[2, -1, 0, -1], [-9, 2, -1, 0], [0, -1, 2, -9], [-1, 0, -1, 2]]},
    "diagram": {"X": [], "tau": [3, 2, 1, 0]},
}


def run(tmp_path, *args, config=None):
    out = tmp_path / "out.json"
    if config is not None:
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps(config))
        args = args + (str(path),)
    code = main(list(args) + ["--out", str(out)])
    return code, json.loads(out.read_text())


def test_validate_reports_compatibility(tmp_path):
    cfg = {"gcm": A2_REVERSAL["gcm"]}
    code, rep = run(tmp_path, "validate", config=cfg)
    assert code == 0
    assert rep["validate"][0]["tau_compatible"] == {"zeta": 1, "exists": True, "kernel": [1, 3, -3, -1]}


def test_validate_affine_principal(tmp_path):
    cfg = {"gcm": {"matrix": [[2, -2], [-2, 2]]}, "diagram": {"X": [], "tau": [1, 0]},
           "params": {"gamma": ["1", "q^-2"], "sigma": ["0", "0"]}}
    code, rep = run(tmp_path, "validate", config=cfg)
    assert code == 0
    rec = rep["validate"][0]
    assert rec["params_valid"] and rec["diagram"]["restricted_rank"] == 1
    assert rec["tau_compatible"]["exists"]


@pytest.mark.parametrize("cfg", [
    {"gcm": {"matrix": [[2, -1], [0, 2]]}},
    {"gcm": {"matrix": [[2]]}, "diagram": {"X": [0], "tau": [0]}, "params": {"gamma": ["q"]}},
    {"gcm": {"matrix": [[2]]}, "diagram": {"X": [], "tau": [0]}, "params": {"gamma": ["q^"]}},
    {"diagram": {}},
])
def test_invalid_input_exits_2(tmp_path, cfg):
    code, rep = run(tmp_path, "validate", config=cfg)
    assert code == 2 and rep["error"]


def test_unknown_module_exits_2(tmp_path):
    cfg = {"gcm": {"matrix": [[2]]}, "diagram": {"X": [], "tau": [0]}, "modules": {},
           "checks": [{"check": "k_intertwining", "modules": ["V9"]}]}
    assert run(tmp_path, "verify", config=cfg)[0] == 2


def test_uncertified_window_exits_2(tmp_path):
    cfg = {"spectral": {"ell": 2, "window": 6, "cutoff": 8}}
    code, rep = run(tmp_path, "spectral", config=cfg)
    assert code == 2 and rep["error"] == "CutoffInsufficientForWindow"


def test_unreadable_config(tmp_path):
    assert main(["validate", str(tmp_path / "missing.json"), "--out", str(tmp_path / "o.json")]) == 2


def test_quasik_output(tmp_path):
    code, rep = run(tmp_path, "quasik", "sl2")
    assert code == 0
    comps = rep["quasi_k"]["components"]
    assert "0" in comps and "6" in comps


def test_kmatrix_output(tmp_path):
    code, rep = run(tmp_path, "kmatrix", "sl2")
    assert code == 0
    assert set(rep["artifacts"]["matrices"]) == {"V1", "V2", "V3"}
    assert rep["k_matrix"]["recipe"]["series"] == "bar(X)"


def test_verify_is_deterministic(tmp_path):
    outs = []
    for jobs in ("1", "2"):
        out = tmp_path / f"v{jobs}.json"
        assert main(["verify", "sl2", "--jobs", jobs, "--out", str(out)]) == 0
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]
    rep = json.loads(outs[0])
    assert [c["pass"] for c in rep["checks"]] == [True] * 3


def test_negative_controls_fail_closed(tmp_path):
    code, rep = run(tmp_path, "verify", "negative-controls")
    assert code == 1
    assert not any(c["pass"] for c in rep["checks"])
    assert all(c["witness"] for c in rep["checks"])


def test_console_script():
    proc = subprocess.run([sys.executable, "-m", "qsp.cli", "validate", "sl2"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["validate"][0]["gcm"]["corank"] == 0
