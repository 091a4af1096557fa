import json

import pytest

from aqec.cli import config_hash, load_config, main
from aqec.fidelity import csv_header_comment, read_csv


def write_cfg(tmp_path, doc, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return str(path)


def test_kl_check_passes(tmp_path, capsys):
    out = tmp_path / "kl"
    assert main(["kl", "--out", str(out), "--check"]) == 0
    assert "PASS grl_no_flip" in capsys.readouterr().out
    doc = json.loads((out / "kl.json").read_text())
    assert doc["grl"]["kl"]["flip_violations"] == []
    assert doc["grl"]["analysis"]["gate_distance"] == 3


def test_config_errors_exit_2(tmp_path):
    bad = write_cfg(tmp_path, {"bogus": 1})
    assert main(["evaluate", "--config", bad, "--out", str(tmp_path / "o")]) == 2
    bad = write_cfg(tmp_path, {"codes": ["steane"]}, "b.json")
    assert main(["evaluate", "--config", bad, "--out", str(tmp_path / "o")]) == 2
    bad = write_cfg(tmp_path, {"params": {"eta2": "x"}}, "c.json")
    assert main(["kl", "--config", bad, "--out", str(tmp_path / "o")]) == 2


def test_evaluate_outputs_and_hash(tmp_path):
    cfg = write_cfg(tmp_path, {"codes": ["grl", "breakeven"], "etas": [0.012], "tau_grid": {"start": 0, "stop": 0.6, "num": 5}})
    out = tmp_path / "ev"
    assert main(["evaluate", "--config", cfg, "--out", str(out)]) == 0
    summary = json.loads((out / "summary.json").read_text())
    h = summary["config_hash"]
    assert len(h) == 16
    path = out / "fidelity_grl_eta0.012.csv"
    assert path.read_text().splitlines()[0] == csv_header_comment(h)
    header, rows = read_csv(path)
    assert header == ["tau", "mean_fidelity", "breakeven"] and len(rows) == 5
    assert float(rows[0][1]) == pytest.approx(1.0)


def test_evaluate_deterministic(tmp_path):
    cfg = write_cfg(tmp_path, {"codes": ["t4c"], "etas": [0.0], "tau_grid": [0.0, 0.3]})
    main(["evaluate", "--config", cfg, "--out", str(tmp_path / "a")])
    main(["evaluate", "--config", cfg, "--out", str(tmp_path / "b")])
    a = (tmp_path / "a" / "fidelity_t4c_eta0.csv").read_text()
    b = (tmp_path / "b" / "fidelity_t4c_eta0.csv").read_text()
    assert a == b


def test_check_miss_exits_4(tmp_path, capsys):
    cfg = write_cfg(tmp_path, {"codes": ["rl"], "etas": [0.0, 0.012], "tau_grid": [0.0, 0.6]})
    assert main(["evaluate", "--config", cfg, "--out", str(tmp_path / "o"), "--check"]) == 4
    assert "FAIL drop_rl" in capsys.readouterr().out
    # without --check the same run succeeds
    assert main(["evaluate", "--config", cfg, "--out", str(tmp_path / "p")]) == 0


def test_config_hash_stable_and_sensitive():
    a = load_config(None, {}, "evaluate")
    b = load_config(None, {}, "evaluate")
    assert config_hash(a) == config_hash(b)
    c = load_config(None, {"solver": "dense"}, "evaluate")
    assert config_hash(c) != config_hash(a)


def test_command_defaults():
    assert load_config(None, {}, "scan-bloch")["params"]["lambda_coop"] == 1e4
    assert load_config(None, {}, "wigner")["tau"] == 4.2
    assert load_config(None, {}, "evaluate")["params"]["lambda_coop"] is None


def test_train_small(tmp_path, capsys):
    doc = {"training": {"schedule": {"phase1_episodes": 4, "phase2_episodes": 2, "fixed_zeta": [1800, 0.012, 600]}, "ppo": {"hidden": 8, "episodes_per_update": 2}}}
    cfg = write_cfg(tmp_path, doc)
    out = tmp_path / "tr"
    assert main(["train", "--config", cfg, "--out", str(out), "--seed", "3"]) == 0
    assert (out / "final.pt").exists() and (out / "episodes.jsonl").exists()
    summary = json.loads((out / "summary.json").read_text())
    assert summary["experiment"] == "train"
    bad = write_cfg(tmp_path, {"training": {"ppo": {"nonsense": 1}}}, "bad.json")
    assert main(["train", "--config", bad, "--out", str(out)]) == 2
