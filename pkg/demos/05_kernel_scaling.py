"""
Growing kernel matrices at a budget of n/10 + m
===============================================

Multi-dimensional RBF and Matern kernels with sizes increasing up to the
dense-oracle limit.  Set ``DEMO_SIZES`` to a comma list to change the grid.
"""

# %%
import os
from pathlib import Path

from logdetective.experiment import ExperimentConfig, run_experiment

SIZES = [int(s) for s in os.environ.get("DEMO_SIZES", "1000,2000").split(",")]
TRIALS = int(os.environ.get("DEMO_TRIALS", 10))
OUT = Path(os.environ.get("DEMO_OUT", "demo-output"))
OUT.mkdir(exist_ok=True)
M = 20

kernels = {
    "rbf5": {"family": "rbf_d", "d": 5, "two_sigma_sq": 5.0},
    "matern3": {"family": "matern_d", "d": 3, "nu": 2.5},
}

# %%
for tag, matrix in kernels.items():
    for n in SIZES:
        ell = n // 10
        strategies = [
            {"name": s, "ells": [ell], "m": M} for s in ("one_sample", "half_samples", "lowrank")
        ] + [{"name": "logdetective", "ells": [ell], "m": M, "beta": 0.75}]
        cfg = ExperimentConfig.from_dict(
            {"matrix": {**matrix, "n": n}, "strategies": strategies, "trials": TRIALS}
        )
        _, summary, _ = run_experiment(cfg, out=str(OUT / f"scaling-{tag}-{n}.csv"))
        for row in summary:
            print(f"{tag:8s} n={n:6d} {row.strategy:20s} mean rel.err {row.mean_rel_error:.2e}")
