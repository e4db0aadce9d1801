"""Command-line experiment runner: ``omdp run|bound|plot|validate|gridworld``.

Exit codes: 0 success, 1 runtime failure, 2 invalid input.
"""
from __future__ import annotations

import argparse
import copy
import csv
import hashlib
import json
import logging
import math
import platform
import sys
from concurrent.futures import ProcessPoolExecutor
from datetime import datetime, timezone
from pathlib import Path

import jsonschema
import numpy as np
import scipy

from . import __version__
from .envs import (
    EAST,
    GridWorldSpec,
    grid_coords,
    make_gridworld,
    make_random_mdp,
    make_random_reward_schedule,
    make_reward_schedule,
)
from .exact_eval import NonErgodicError
from .gibbs import GibbsConfig
from .mdp_core import load_json, mdp_from_dict, mdp_to_dict, policy_to_dict, save_json, validate_mdp
from .omdp_pi import RunAborted, point_mass
from .regret import RegretCurve, estimate_theory_constants, regret_curve, theorem1_bound
from .stochastic_iter import (
    ConstantSchedule,
    ExactOperator,
    HarmonicSchedule,
    MonteCarloOperator,
    PowerSchedule,
    TdOperator,
    si_run,
)
from .td_linear import FeatureMap, supergrid_indicators, tabular_minus_one

log = logging.getLogger("omdp")

EXIT_OK, EXIT_RUNTIME, EXIT_INVALID = 0, 1, 2

_SEED = {"type": "integer", "minimum": 0}

CONFIG_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["environment", "horizon", "rewards", "seed"],
    "properties": {
        "environment": {
            "oneOf": [
                {
                    "type": "object",
                    "additionalProperties": False,
                    "required": ["type", "seed"],
                    "properties": {
                        "type": {"const": "gridworld"},
                        "width": {"type": "integer", "minimum": 1},
                        "height": {"type": "integer", "minimum": 1},
                        "slip": {"type": "number", "minimum": 0, "exclusiveMaximum": 1},
                        "super": {"type": "integer", "minimum": 1},
                        "seed": _SEED,
                        "teleport_on_goal": {"type": "boolean"},
                    },
                },
                {
                    "type": "object",
                    "additionalProperties": False,
                    "required": ["type", "n_states", "n_actions", "seed"],
                    "properties": {
                        "type": {"const": "random"},
                        "n_states": {"type": "integer", "minimum": 1},
                        "n_actions": {"type": "integer", "minimum": 1},
                        "mix_epsilon": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
                        "seed": _SEED,
                    },
                },
                {
                    "type": "object",
                    "additionalProperties": False,
                    "required": ["type", "path"],
                    "properties": {"type": {"const": "file"}, "path": {"type": "string"}},
                },
            ]
        },
        "algorithm": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "kappa": {"type": "number", "exclusiveMinimum": 0},
                "operator": {"enum": ["exact", "monte_carlo", "td_linear"]},
                "schedule": {
                    "type": "object",
                    "additionalProperties": False,
                    "required": ["type"],
                    "properties": {
                        "type": {"enum": ["harmonic", "power", "constant"]},
                        "c": {"type": "number", "exclusiveMinimum": 0},
                        "p": {"type": "number", "exclusiveMinimum": 0},
                    },
                },
                "features": {
                    "oneOf": [
                        {"enum": ["tabular_minus_one", "supergrid_indicators"]},
                        {
                            "type": "object",
                            "additionalProperties": False,
                            "required": ["path"],
                            "properties": {"path": {"type": "string"}},
                        },
                    ]
                },
                "mc_rollouts": {"type": "integer", "minimum": 1},
                "mc_horizon": {"type": "integer", "minimum": 1},
                "td_iterations": {"type": "integer", "minimum": 1},
            },
        },
        "horizon": {"type": "integer", "minimum": 1},
        "rewards": {
            "type": "object",
            "additionalProperties": False,
            "required": ["period", "seed"],
            "properties": {"period": {"type": "integer", "minimum": 1}, "seed": _SEED},
        },
        "seed": _SEED,
        "output_dir": {"type": "string"},
        "initial_state": {"type": "integer", "minimum": 0},
        "snapshot_every": {"type": "integer", "minimum": 0},
        "bound": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"n_policies": {"type": "integer", "minimum": 100}, "seed": _SEED},
        },
    },
}


class ConfigError(ValueError):
    pass


def validate_config(cfg: dict) -> None:
    try:
        jsonschema.validate(cfg, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        where = ".".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"{where}: {_schema_message(exc)}") from None
    alg = cfg.get("algorithm", {})
    if alg.get("operator") == "td_linear" and "features" not in alg:
        raise ConfigError("algorithm.features is required for the td_linear operator")


def _schema_message(exc: jsonschema.ValidationError) -> str:
    # oneOf failures hide the useful message in the closest branch
    if exc.validator == "oneOf" and exc.context:
        best = jsonschema.exceptions.best_match(exc.context)
        return best.message
    return exc.message


def apply_overrides(cfg: dict, overrides: list[str]) -> dict:
    """Apply ``key.sub=value`` overrides; values are parsed as JSON when possible."""
    cfg = copy.deepcopy(cfg)
    for item in overrides:
        key, sep, raw = item.partition("=")
        if not sep or not key:
            raise ConfigError(f"override must look like key=value, got {item!r}")
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        node = cfg
        parts = key.split(".")
        for part in parts[:-1]:
            node = node.setdefault(part, {})
            if not isinstance(node, dict):
                raise ConfigError(f"cannot set {key}: {part} is not a section")
        node[parts[-1]] = value
    return cfg


def load_config(path: str | Path, overrides: list[str] | None = None) -> dict:
    try:
        cfg = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    cfg = apply_overrides(cfg, overrides or [])
    validate_config(cfg)
    return cfg


def _grid_spec(env: dict) -> GridWorldSpec:
    keys = ("width", "height", "slip", "super", "seed", "teleport_on_goal")
    return GridWorldSpec(**{k: env[k] for k in keys if k in env})


def build_environment(cfg: dict, base: Path | None = None):
    """Return ``(mdp, rewards_schedule)`` for a validated config."""
    env = cfg["environment"]
    horizon, period, rseed = cfg["horizon"], cfg["rewards"]["period"], cfg["rewards"]["seed"]
    if env["type"] == "gridworld":
        spec = _grid_spec(env)
        return make_gridworld(spec), make_reward_schedule(spec, horizon, period, rseed)
    if env["type"] == "random":
        mdp = make_random_mdp(env["n_states"], env["n_actions"], env.get("mix_epsilon", 0.1), env["seed"])
    else:
        path = Path(env["path"])
        if base is not None and not path.is_absolute():
            path = base / path
        mdp = mdp_from_dict(load_json(path))
        report = validate_mdp(mdp)
        if not report.ok:
            raise ConfigError(f"{path}: {report}")
    return mdp, make_random_reward_schedule(mdp.n_states, mdp.n_actions, horizon, period, rseed)


def _features(alg: dict, cfg: dict, n_states: int, base: Path | None) -> FeatureMap:
    feat = alg["features"]
    if feat == "tabular_minus_one":
        return tabular_minus_one(n_states)
    if feat == "supergrid_indicators":
        if cfg["environment"]["type"] != "gridworld":
            raise ConfigError("supergrid_indicators needs a gridworld environment")
        return supergrid_indicators(_grid_spec(cfg["environment"]))
    path = Path(feat["path"])
    if base is not None and not path.is_absolute():
        path = base / path
    return FeatureMap.from_dict(load_json(path))


def build_algorithm(cfg: dict, n_states: int, base: Path | None = None):
    alg = cfg.get("algorithm", {})
    gibbs = GibbsConfig(alg.get("kappa", 1.0))
    op_name = alg.get("operator", "exact")
    if op_name == "exact":
        operator = ExactOperator()
    elif op_name == "monte_carlo":
        operator = MonteCarloOperator(alg.get("mc_rollouts", 1000), alg.get("mc_horizon", 1000))
    else:
        operator = TdOperator(_features(alg, cfg, n_states, base), alg.get("td_iterations", 20_000))
    sched = alg.get("schedule", {"type": "harmonic"})
    if sched["type"] == "harmonic":
        schedule = HarmonicSchedule()
    elif sched["type"] == "power":
        schedule = PowerSchedule(sched.get("c", 1.0), sched.get("p", 1.0))
    else:
        schedule = ConstantSchedule(sched.get("c", 1.0))
    return gibbs, operator, schedule


def _digest(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def write_regret_csv(curve: RegretCurve, path: Path) -> None:
    with path.open("w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RegretCurve.columns)
        for row in curve.rows():
            w.writerow([row[0]] + [repr(x) for x in row[1:]])


def _write_trace_csv(trace, path: Path) -> None:
    with path.open("w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "rho_pi_t", "exp_reward_alg", "realized_reward", "state", "action"])
        for k in range(len(trace)):
            w.writerow([
                trace.t[k], repr(trace.rho_pi[k]), repr(trace.exp_reward[k]),
                repr(trace.realized_reward[k]), trace.states[k], trace.actions[k],
            ])


def _write_manifest(out: Path, cfg: dict, started: str, note: str | None = None) -> None:
    files = {}
    for f in sorted(out.rglob("*")):
        if f.is_file() and f.name != "manifest.json":
            files[f.relative_to(out).as_posix()] = _digest(f)
    manifest = {
        "config": cfg,
        "versions": {
            "omdp": __version__,
            "python": platform.python_version(),
            "numpy": np.__version__,
            "scipy": scipy.__version__,
        },
        "started": started,
        "finished": datetime.now(timezone.utc).isoformat(),
        "files": files,
    }
    if note:
        manifest["note"] = note
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def run_experiment(cfg: dict, out: Path, base: Path | None = None) -> int:
    """Run one configured experiment into ``out``; returns an exit code."""
    started = datetime.now(timezone.utc).isoformat()
    out.mkdir(parents=True, exist_ok=True)
    mdp, schedule_r = build_environment(cfg, base)
    gibbs, operator, step_schedule = build_algorithm(cfg, mdp.n_states, base)
    (out / "config.json").write_text(json.dumps(cfg, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    s0 = cfg.get("initial_state", 0)
    if s0 >= mdp.n_states:
        raise ConfigError(f"initial_state {s0} out of range for {mdp.n_states} states")
    snap_every = cfg.get("snapshot_every", 0)
    snaps: dict[int, np.ndarray] = {}
    keep = snap_every > 0

    try:
        trace = si_run(
            mdp, schedule_r, cfg["horizon"], gibbs, cfg["seed"], operator, step_schedule,
            d1=point_mass(mdp.n_states, s0), keep_history=keep,
        )
    except RunAborted as exc:
        _write_trace_csv(exc.trace, out / "trace_partial.csv")
        _write_manifest(out, cfg, started, note=f"run aborted: {exc}")
        log.error("run aborted: %s", exc)
        return EXIT_RUNTIME
    if keep:
        snap_dir = out / "snapshots"
        snap_dir.mkdir(exist_ok=True)
        for t in range(snap_every, len(trace) + 1, snap_every):
            snaps[t] = trace.policies[t - 1]
            save_json(policy_to_dict(snaps[t]), snap_dir / f"policy_{t:08d}.json")
    save_json(policy_to_dict(trace.final_state.policy), out / "policy_final.json")
    try:
        curve = regret_curve(mdp, trace, schedule_r, gibbs)
    except Exception as exc:
        _write_trace_csv(trace, out / "trace_partial.csv")
        _write_manifest(out, cfg, started, note=f"regret computation failed: {exc}")
        log.error("regret computation failed: %s", exc)
        return EXIT_RUNTIME
    save_json(policy_to_dict(curve.star.policy), out / "policy_offline.json")
    write_regret_csv(curve, out / "regret.csv")
    _write_manifest(out, cfg, started)
    log.info("final average regret %.6g", curve.avg_regret[-1])
    return EXIT_OK


def _replicate(args) -> int:
    cfg, out, base = args
    return run_experiment(cfg, Path(out), base)


def cmd_run(args) -> int:
    cfg = load_config(args.config, args.set)
    base = Path(args.config).resolve().parent
    out = Path(args.out or cfg.get("output_dir") or "omdp_run")
    if args.replicates <= 1:
        return run_experiment(cfg, out, base)
    jobs = []
    for k in range(args.replicates):
        rep = copy.deepcopy(cfg)
        # expected rewards do not depend on the run seed, so the reward draw moves too
        rep["seed"] = cfg["seed"] + k
        rep["rewards"]["seed"] = cfg["rewards"]["seed"] + k
        jobs.append((rep, str(out / f"rep_{k:03d}"), base))
    with ProcessPoolExecutor(max_workers=min(args.replicates, args.workers or args.replicates)) as pool:
        codes = list(pool.map(_replicate, jobs))
    return max(codes)


def bound_report(cfg: dict, base: Path | None = None, horizons=(100, 1000, 10000)) -> dict:
    mdp, _ = build_environment(cfg, base)
    gibbs = GibbsConfig(cfg.get("algorithm", {}).get("kappa", 1.0))
    bcfg = cfg.get("bound", {})
    consts = estimate_theory_constants(mdp, gibbs, bcfg.get("n_policies", 100), bcfg.get("seed", 0))
    return {
        "tau": consts.tau,
        "xi": consts.xi,
        "c_pi": consts.c_pi,
        "c_v": consts.c_v,
        "C": consts.c,
        "sublinear": consts.sublinear,
        "bounds": {int(t): theorem1_bound(consts, t) for t in horizons},
    }


def cmd_bound(args) -> int:
    cfg = load_config(args.config, args.set)
    try:
        rep = bound_report(cfg, Path(args.config).resolve().parent)
    except (ValueError, NonErgodicError) as exc:
        if isinstance(exc, ConfigError):
            raise
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    print(f"tau (empirical)  {rep['tau']:.6g}")
    print(f"xi               {rep['xi']:.6g}")
    print(f"C_pi (empirical) {rep['c_pi']:.6g}")
    print(f"C_v              {rep['c_v']:.6g}")
    print(f"C                {rep['C']:.6g}")
    print(f"sublinear (C_v<1) {rep['sublinear']}")
    for t, b in rep["bounds"].items():
        print(f"bound T={t:<6d} {b:.6g}")
    if not rep["sublinear"]:
        print("note: C_v >= 1, the bound is not sublinear and carries no guarantee")
    return EXIT_OK


# -- plotting -------------------------------------------------------------------

_W, _H, _PAD = 640, 400, 50


def _read_regret_csv(path: Path) -> dict[str, list[float]]:
    if not path.is_file():
        raise ConfigError(f"{path} not found")
    with path.open(encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or set(RegretCurve.columns) - set(reader.fieldnames):
            raise ConfigError(f"{path}: missing regret columns")
        cols: dict[str, list[float]] = {c: [] for c in RegretCurve.columns}
        for lineno, row in enumerate(reader, start=2):
            try:
                for c in RegretCurve.columns:
                    cols[c].append(float(row[c]))
            except (TypeError, ValueError):
                raise ConfigError(f"{path}:{lineno}: ill-formed row") from None
    if not cols["t"]:
        raise ConfigError(f"{path}: no data rows")
    return cols


def _polyline_svg(title: str, xs, series: dict[str, list[float]]) -> str:
    colors = ["#1f77b4", "#d62728", "#2ca02c"]
    allys = [y for ys in series.values() for y in ys if math.isfinite(y)]
    x0, x1 = min(xs), max(xs)
    y0, y1 = (min(allys), max(allys)) if allys else (0.0, 1.0)
    if x1 == x0:
        x1 = x0 + 1.0
    if y1 == y0:
        y1 = y0 + 1.0

    def px(x):
        return _PAD + (x - x0) / (x1 - x0) * (_W - 2 * _PAD)

    def py(y):
        return _H - _PAD - (y - y0) / (y1 - y0) * (_H - 2 * _PAD)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" viewBox="0 0 {_W} {_H}">',
        f'<text x="{_W / 2}" y="20" text-anchor="middle" font-size="14">{title}</text>',
        f'<line x1="{_PAD}" y1="{_H - _PAD}" x2="{_W - _PAD}" y2="{_H - _PAD}" stroke="black"/>',
        f'<line x1="{_PAD}" y1="{_PAD}" x2="{_PAD}" y2="{_H - _PAD}" stroke="black"/>',
        f'<text x="{_PAD}" y="{_H - _PAD + 15}" font-size="10">{x0:g}</text>',
        f'<text x="{_W - _PAD}" y="{_H - _PAD + 15}" font-size="10" text-anchor="end">{x1:g}</text>',
        f'<text x="{_PAD - 4}" y="{_PAD}" font-size="10" text-anchor="end">{y1:.3g}</text>',
        f'<text x="{_PAD - 4}" y="{_H - _PAD}" font-size="10" text-anchor="end">{y0:.3g}</text>',
    ]
    for k, (name, ys) in enumerate(series.items()):
        pts = " ".join(f"{px(x):.2f},{py(y):.2f}" for x, y in zip(xs, ys))
        color = colors[k % len(colors)]
        parts.append(f'<polyline class="series" data-name="{name}" fill="none" stroke="{color}" points="{pts}"/>')
        parts.append(f'<text x="{_W - _PAD}" y="{_PAD + 14 * k}" font-size="11" fill="{color}" text-anchor="end">{name}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def policy_svg(spec: GridWorldSpec, policy: np.ndarray, cell: int = 30) -> str:
    """One triangle per state pointing along the expected move direction."""
    w, h = spec.width * cell, spec.height * cell
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">']
    for s in range(spec.n_states):
        x, y = grid_coords(spec, s)
        cx, cy = (x + 0.5) * cell, h - (y + 0.5) * cell
        east = policy[s, EAST]
        ang = math.atan2(1.0 - east, east)  # 0 = east, pi/2 = north
        ux, uy = math.cos(ang), -math.sin(ang)
        r = 0.4 * cell
        tip = (cx + ux * r, cy + uy * r)
        left = (cx - ux * r * 0.5 - uy * r * 0.5, cy - uy * r * 0.5 + ux * r * 0.5)
        right = (cx - ux * r * 0.5 + uy * r * 0.5, cy - uy * r * 0.5 - ux * r * 0.5)
        pts = " ".join(f"{a:.2f},{b:.2f}" for a, b in (tip, left, right))
        parts.append(f'<rect x="{x * cell}" y="{h - (y + 1) * cell}" width="{cell}" height="{cell}" fill="white" stroke="#ccc"/>')
        parts.append(f'<polygon class="arrow" data-state="{s}" points="{pts}" fill="black"/>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def plot_run(run_dir: Path) -> list[Path]:
    cols = _read_regret_csv(run_dir / "regret.csv")
    written = []
    regret = run_dir / "regret.svg"
    regret.write_text(_polyline_svg("average regret", cols["t"], {"avg_regret": cols["avg_regret"]}), encoding="utf-8")
    written.append(regret)
    reward = run_dir / "reward.svg"
    reward.write_text(
        _polyline_svg(
            "cumulative expected reward",
            cols["t"],
            {"omdp-pi": cols["cum_reward_alg"], "best offline": cols["cum_reward_star"]},
        ),
        encoding="utf-8",
    )
    written.append(reward)
    cfg_path, pol_path = run_dir / "config.json", run_dir / "policy_final.json"
    if cfg_path.is_file() and pol_path.is_file():
        cfg = load_json(cfg_path)
        if cfg.get("environment", {}).get("type") == "gridworld":
            spec = _grid_spec(cfg["environment"])
            probs = np.asarray(load_json(pol_path)["probs"], dtype=float)
            path = run_dir / "policy.svg"
            path.write_text(policy_svg(spec, probs), encoding="utf-8")
            written.append(path)
    return written


def cmd_plot(args) -> int:
    for p in plot_run(Path(args.run_dir)):
        print(p)
    return EXIT_OK


# -- validation -----------------------------------------------------------------

MDP_SCHEMA = {
    "type": "object",
    "required": ["n_states", "n_actions", "transition"],
    "properties": {
        "n_states": {"type": "integer", "minimum": 1},
        "n_actions": {"type": "integer", "minimum": 1},
        "transition": {"type": "array"},
    },
}


def validate_document(path: Path) -> list[str]:
    """Problems found in an MDP, reward or config JSON document (empty if clean)."""
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        return [f"cannot read {path}: {exc}"]
    if isinstance(doc, dict) and "transition" in doc:
        try:
            jsonschema.validate(doc, MDP_SCHEMA)
            mdp = mdp_from_dict(doc)
        except (jsonschema.ValidationError, ValueError) as exc:
            return [getattr(exc, "message", str(exc))]
        return validate_mdp(mdp).errors
    if isinstance(doc, dict) and set(doc) == {"values"}:
        r = np.asarray(doc["values"], dtype=float)
        bad = np.argwhere(~((r >= 0.0) & (r <= 1.0)))
        return [f"reward (s={s}, a={a}) = {r[s, a]} outside [0, 1]" for s, a in bad]
    try:
        validate_config(doc)
    except ConfigError as exc:
        return [str(exc)]
    return []


def cmd_validate(args) -> int:
    problems = validate_document(Path(args.path))
    for p in problems:
        print(p)
    if problems:
        return EXIT_INVALID
    print("ok")
    return EXIT_OK


def cmd_gridworld(args) -> int:
    spec = GridWorldSpec(args.width, args.height, args.slip, args.super, args.seed, not args.no_teleport)
    doc = mdp_to_dict(make_gridworld(spec))
    if args.out:
        save_json(doc, args.out)
    else:
        print(json.dumps(doc))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="omdp", description="Online MDP policy iteration experiments.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run an experiment and write regret.csv")
    p.add_argument("--config", required=True)
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE")
    p.add_argument("--out")
    p.add_argument("--replicates", type=int, default=1)
    p.add_argument("--workers", type=int, default=0)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("bound", help="estimate constants and evaluate the regret bound")
    p.add_argument("--config", required=True)
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE")
    p.set_defaults(func=cmd_bound)

    p = sub.add_parser("plot", help="write SVG plots for a run directory")
    p.add_argument("run_dir")
    p.set_defaults(func=cmd_plot)

    p = sub.add_parser("validate", help="check an MDP, reward or config JSON file")
    p.add_argument("path")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("gridworld", help="export the grid world MDP as JSON")
    p.add_argument("--width", type=int, default=16)
    p.add_argument("--height", type=int, default=16)
    p.add_argument("--slip", type=float, default=0.3)
    p.add_argument("--super", type=int, default=4)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--no-teleport", action="store_true")
    p.add_argument("--out")
    p.set_defaults(func=cmd_gridworld)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INVALID if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except ValueError as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (RuntimeError, np.linalg.LinAlgError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
