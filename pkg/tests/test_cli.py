import csv
import hashlib
import json
import re
import subprocess
import sys

import numpy as np
import pytest

from omdp.cli import bound_report, main
from omdp.envs import make_random_mdp
from omdp.mdp_core import mdp_to_dict
from omdp.regret import TheoryConstants, theorem1_bound

HEADER = "t,exp_reward_alg,rho_pi_t,rho_star_mean,cum_reward_alg,cum_reward_star,cum_regret,avg_regret"


def _write(path, doc):
    path.write_text(json.dumps(doc), encoding="utf-8")
    return path


def _random_cfg(horizon=300, **extra):
    cfg = {
        "environment": {"type": "random", "n_states": 6, "n_actions": 3, "mix_epsilon": 0.1, "seed": 0},
        "algorithm": {"kappa": 0.5},
        "horizon": horizon,
        "rewards": {"period": 50, "seed": 1},
        "seed": 3,
    }
    cfg.update(extra)
    return cfg


def _sha(path):
    return hashlib.sha256(path.read_bytes()).hexdigest()


def test_run_is_deterministic(tmp_path):
    cfg = _write(tmp_path / "c.json", _random_cfg())
    assert main(["run", "--config", str(cfg), "--out", str(tmp_path / "a")]) == 0
    assert main(["run", "--config", str(cfg), "--out", str(tmp_path / "b")]) == 0
    a, b = tmp_path / "a" / "regret.csv", tmp_path / "b" / "regret.csv"
    assert a.read_bytes() == b.read_bytes()
    text = a.read_text(encoding="utf-8")
    assert text.startswith(HEADER + "\n") and "\r" not in text
    assert len(text.splitlines()) == 301


def test_csv_columns_consistent(tmp_path):
    cfg = _write(tmp_path / "c.json", _random_cfg())
    main(["run", "--config", str(cfg), "--out", str(tmp_path / "a")])
    with (tmp_path / "a" / "regret.csv").open() as fh:
        rows = list(csv.DictReader(fh))
    for row in rows:
        t = float(row["t"])
        cum = float(row["cum_reward_star"]) - float(row["cum_reward_alg"])
        assert float(row["cum_regret"]) == pytest.approx(cum, abs=1e-10)
        assert float(row["avg_regret"]) == pytest.approx(float(row["cum_regret"]) / t, abs=1e-12)


def test_manifest_lists_every_file(tmp_path):
    cfg = _write(tmp_path / "c.json", _random_cfg(snapshot_every=100))
    out = tmp_path / "run"
    assert main(["run", "--config", str(cfg), "--out", str(out)]) == 0
    manifest = json.loads((out / "manifest.json").read_text())
    files = {p.relative_to(out).as_posix() for p in out.rglob("*") if p.is_file()} - {"manifest.json"}
    assert set(manifest["files"]) == files
    for name, digest in manifest["files"].items():
        assert _sha(out / name) == digest
    assert manifest["config"]["seed"] == 3
    assert {"omdp", "numpy", "scipy", "python"} <= set(manifest["versions"])
    assert len(list((out / "snapshots").glob("*.json"))) == 3


def test_single_action_environment_zero_regret(tmp_path):
    env = _write(tmp_path / "env.json", mdp_to_dict(make_random_mdp(5, 1, 0.1, seed=2)))
    cfg = _random_cfg()
    cfg["environment"] = {"type": "file", "path": env.name}
    path = _write(tmp_path / "c.json", cfg)
    assert main(["run", "--config", str(path), "--out", str(tmp_path / "r")]) == 0
    with (tmp_path / "r" / "regret.csv").open() as fh:
        assert max(abs(float(row["cum_regret"])) for row in csv.DictReader(fh)) <= 1e-8


def test_unknown_key_rejected(tmp_path, capsys):
    path = _write(tmp_path / "c.json", _random_cfg(colour="blue"))
    assert main(["run", "--config", str(path)]) == 2
    assert "colour" in capsys.readouterr().err
    assert main(["validate", str(path)]) == 2
    assert "colour" in capsys.readouterr().out


def test_missing_seed_rejected(tmp_path):
    cfg = _random_cfg()
    del cfg["seed"]
    assert main(["validate", str(_write(tmp_path / "c.json", cfg))]) == 2


def test_set_override(tmp_path):
    path = _write(tmp_path / "c.json", _random_cfg())
    assert main(["run", "--config", str(path), "--set", "horizon=20", "--out", str(tmp_path / "o")]) == 0
    assert len((tmp_path / "o" / "regret.csv").read_text().splitlines()) == 21
    assert main(["run", "--config", str(path), "--set", "algorithm.kappa=-1"]) == 2
    assert main(["run", "--config", str(path), "--set", "noequals"]) == 2


def test_td_operator_requires_features(tmp_path):
    cfg = _random_cfg()
    cfg["algorithm"]["operator"] = "td_linear"
    assert main(["validate", str(_write(tmp_path / "c.json", cfg))]) == 2
    cfg["algorithm"].update(features="tabular_minus_one", td_iterations=500)
    path = _write(tmp_path / "c.json", cfg)
    assert main(["run", "--config", str(path), "--set", "horizon=30", "--out", str(tmp_path / "o")]) == 0


def test_monte_carlo_operator_runs(tmp_path):
    cfg = _random_cfg(horizon=20)
    cfg["algorithm"].update(operator="monte_carlo", mc_rollouts=10, mc_horizon=50,
                            schedule={"type": "power", "c": 1.0, "p": 0.8})
    path = _write(tmp_path / "c.json", cfg)
    assert main(["run", "--config", str(path), "--out", str(tmp_path / "o")]) == 0


def test_runtime_failure_writes_partial_artifacts(tmp_path):
    ident = np.repeat(np.eye(3)[:, None, :], 2, axis=1)
    env = _write(tmp_path / "env.json", mdp_to_dict(ident))
    cfg = _random_cfg()
    cfg["environment"] = {"type": "file", "path": str(env)}
    out = tmp_path / "o"
    assert main(["run", "--config", str(_write(tmp_path / "c.json", cfg)), "--out", str(out)]) == 1
    manifest = json.loads((out / "manifest.json").read_text())
    assert "aborted" in manifest["note"]
    assert "trace_partial.csv" in manifest["files"]


def test_replicates(tmp_path):
    path = _write(tmp_path / "c.json", _random_cfg(horizon=50))
    assert main(["run", "--config", str(path), "--out", str(tmp_path / "o"), "--replicates", "2"]) == 0
    a = (tmp_path / "o" / "rep_000" / "regret.csv").read_bytes()
    b = (tmp_path / "o" / "rep_001" / "regret.csv").read_bytes()
    assert a != b
    rep = json.loads((tmp_path / "o" / "rep_001" / "config.json").read_text())
    assert rep["seed"] == 4 and rep["rewards"]["seed"] == 2


def test_gridworld_export_and_validate(tmp_path, capsys):
    out = tmp_path / "g.json"
    assert main(["gridworld", "--width", "4", "--height", "4", "--super", "2", "--seed", "1", "--out", str(out)]) == 0
    assert main(["validate", str(out)]) == 0
    doc = json.loads(out.read_text())
    doc["transition"][5][1][0] += 0.25
    assert main(["validate", str(_write(tmp_path / "bad.json", doc))]) == 2
    assert "s=5, a=1" in capsys.readouterr().out


def test_validate_reward_document(tmp_path):
    assert main(["validate", str(_write(tmp_path / "r.json", {"values": [[0.2, 1.0]]}))]) == 0
    assert main(["validate", str(_write(tmp_path / "r.json", {"values": [[0.2, 1.5]]}))]) == 2


def test_plot_synthetic_ten_rows(tmp_path):
    lines = [HEADER] + [f"{t},0.5,0.5,0.5,{0.5 * t},{0.6 * t},{0.1 * t},0.1" for t in range(1, 11)]
    (tmp_path / "regret.csv").write_text("\n".join(lines) + "\n")
    assert main(["plot", str(tmp_path)]) == 0
    svg = (tmp_path / "regret.svg").read_text()
    pts = re.search(r'<polyline[^>]*points="([^"]*)"', svg).group(1).split()
    assert len(pts) == 10
    reward = (tmp_path / "reward.svg").read_text()
    assert reward.count("<polyline") == 2
    assert not (tmp_path / "policy.svg").exists()


def test_plot_empty_csv_errors(tmp_path):
    (tmp_path / "regret.csv").write_text(HEADER + "\n")
    assert main(["plot", str(tmp_path)]) == 2
    assert not (tmp_path / "regret.svg").exists() and not (tmp_path / "reward.svg").exists()
    (tmp_path / "regret.csv").write_text(HEADER + "\n1,a,b\n")
    assert main(["plot", str(tmp_path)]) == 2
    assert main(["plot", str(tmp_path / "missing")]) == 2


def test_plot_gridworld_policy_glyphs(tmp_path):
    cfg = {
        "environment": {"type": "gridworld", "width": 4, "height": 6, "slip": 0.3, "super": 2, "seed": 0},
        "horizon": 100,
        "rewards": {"period": 50, "seed": 0},
        "seed": 0,
    }
    out = tmp_path / "g"
    assert main(["run", "--config", str(_write(tmp_path / "c.json", cfg)), "--out", str(out)]) == 0
    assert main(["plot", str(out)]) == 0
    assert (out / "policy.svg").read_text().count('class="arrow"') == 24


def test_bound_uniform_rows(tmp_path, capsys):
    env = _write(tmp_path / "env.json", mdp_to_dict(np.full((4, 2, 4), 0.25)))
    path = _write(tmp_path / "c.json", {**_random_cfg(), "environment": {"type": "file", "path": str(env)}})
    rep = bound_report(json.loads(path.read_text()))
    assert rep["tau"] == 0.0
    assert main(["bound", "--config", str(path)]) == 0
    assert "tau (empirical)  0" in capsys.readouterr().out


def test_bound_identity_is_non_mixing(tmp_path, capsys):
    ident = np.repeat(np.eye(3)[:, None, :], 2, axis=1)
    env = _write(tmp_path / "env.json", mdp_to_dict(ident))
    path = _write(tmp_path / "c.json", {**_random_cfg(), "environment": {"type": "file", "path": str(env)}})
    assert main(["bound", "--config", str(path)]) == 1
    assert "not mixing" in capsys.readouterr().err


def test_bound_random_reevaluated(tmp_path, capsys):
    cfg = _random_cfg()
    cfg["environment"].update(n_states=10, n_actions=4)
    path = _write(tmp_path / "c.json", cfg)
    rep = bound_report(cfg)
    for t, value in rep["bounds"].items():
        e = np.exp(-1.0 / rep["tau"])
        k = (2 - e) / (1 - e)
        tau, xi, cv = rep["tau"], rep["xi"], rep["c_v"]
        big_c = 6 * tau * (2 - cv + 1 / cv + (1 - cv) / (1 + cv))
        log_coef = 6 * tau * xi * k + 2 * tau**3
        want = k * big_c * xi * t**cv + log_coef * np.log(t) + log_coef + 2 * tau**3 * np.exp(tau + 2) + 4 * tau
        assert abs(value - want) <= 1e-12 * abs(want)
        assert value == theorem1_bound(TheoryConstants(tau, xi, rep["c_pi"]), t)
    assert main(["bound", "--config", str(path)]) == 0
    out = capsys.readouterr().out
    assert "T=100" in out and "T=10000" in out and "sublinear" in out


def test_entry_point_subprocess(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "omdp", "validate", str(tmp_path / "nope.json")],
                          capture_output=True, text=True)
    assert proc.returncode == 2
    proc = subprocess.run([sys.executable, "-m", "omdp", "frobnicate"], capture_output=True, text=True)
    assert proc.returncode == 2
