"""Grid world: configure, run through the CLI entry point, and plot.

Writes a run directory with regret.csv, the final and offline policies, a
manifest, and three SVG figures.
"""
import json
import sys
import tempfile
from pathlib import Path

from omdp.cli import main

out = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(tempfile.mkdtemp(prefix="omdp_grid_"))
config = {
    "environment": {"type": "gridworld", "width": 8, "height": 8, "slip": 0.3, "super": 2, "seed": 0},
    "algorithm": {"kappa": 1.0},
    "horizon": 20_000,
    "rewards": {"period": 2000, "seed": 0},
    "seed": 0,
    "snapshot_every": 5000,
}
out.mkdir(parents=True, exist_ok=True)
cfg_path = out / "config_in.json"
cfg_path.write_text(json.dumps(config, indent=2))

code = main(["run", "--config", str(cfg_path), "--out", str(out / "run")])
print("run exit code", code)
code = main(["plot", str(out / "run")])
print("plot exit code", code)

rows = (out / "run" / "regret.csv").read_text().splitlines()
print("last row:", rows[-1])
print("artifacts in", out / "run")
