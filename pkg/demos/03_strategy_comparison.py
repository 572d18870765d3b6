"""
Comparing budget allocations
============================

Mean relative error over repeated trials for every strategy at matched
budgets ``ell + m``.  The deviation column drops the best and worst 10%
of errors before computing the spread.
"""

# %%
import os
from pathlib import Path

from logdetective.experiment import ExperimentConfig, run_experiment

N = int(os.environ.get("DEMO_N", 1000))
TRIALS = int(os.environ.get("DEMO_TRIALS", 20))
OUT = Path(os.environ.get("DEMO_OUT", "demo-output"))
OUT.mkdir(exist_ok=True)

ells = [100, 200, 400]
strategies = [
    {"name": "one_sample", "ells": ells},
    {"name": "logdetective", "ells": ells, "beta": 0.75},
    {"name": "half_samples", "ells": ells},
    {"name": "alpha_rank", "ells": ells, "alpha": 0.5},
    {"name": "lowrank", "ells": ells},
    {"name": "plain_slq", "ells": ells},
]

# %%
for family, extra in [("geom", {}), ("rbf", {}), ("matern", {"nu": 1.5, "mu": 1e-4})]:
    cfg = ExperimentConfig.from_dict(
        {"matrix": {"family": family, "n": N, **extra}, "strategies": strategies, "trials": TRIALS}
    )
    _, summary, _ = run_experiment(cfg, out=str(OUT / f"compare-{family}.csv"))
    print(f"\n{family}")
    for row in summary:
        print(f"  {row.strategy:20s} ell={row.ell:4d} mean {row.mean_rel_error:.2e}  "
              f"trimmed std {row.trimmed_std:.2e}")
