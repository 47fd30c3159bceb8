# %% [markdown]
# Config-driven sweep written to disk, then a slope fit from the CSV.
#
# The same config run from the shell is
#   scatter run --config sweep.json --out results/
#   scatter fit --csv results/sweep.csv --where "p=2"

# %%
import json
import tempfile
from pathlib import Path

from scatmoments.experiments import run_config
from scatmoments.fitting import fit_slope

config = {
    "schema_version": 1,
    "name": "sweep",
    "seed": 1729,
    "horizon": 200000,
    "process": {"kind": "poisson", "intensity": {"kind": "constant", "a": 0.01}, "charges": {"kind": "gaussian", "variance": 1.0}},
    "filters": {"ladder": {"s_max": 16, "levels": list(range(8))}},
    "moments": [{"p": 1}, {"p": 2}],
    "estimator": "invariant",
    "check": {"relative_tolerance": 0.15},
}

# %%
out = Path(tempfile.mkdtemp())
result = run_config(config)
csv_path, summary_path = result.write(out)
print(json.dumps(json.loads(Path(summary_path).read_text())["checks"], indent=1))

# %%
for p in (1, 2):
    print(f"p={p} slope", round(fit_slope(csv_path, f"p={p}").slope, 3))
