"""
How the switching parameter picks a branch
==========================================

log-det-ective estimates the Frobenius error of two nested Nystrom
approximations from one sketch and compares them.  This script counts how
often each branch is chosen for several values of beta.
"""

# %%
import csv
import os
from pathlib import Path

from logdetective import gen_flat, gen_geometric, gen_matern, gen_rbf, logdetective

N = int(os.environ.get("DEMO_N", 1000))
SEEDS = int(os.environ.get("DEMO_TRIALS", 20))
OUT = Path(os.environ.get("DEMO_OUT", "demo-output"))
OUT.mkdir(exist_ok=True)

operators = {
    "geom": gen_geometric(N),
    "rbf": gen_rbf(N),
    "matern-1/2": gen_matern(N, nu=0.5),
    "flat": gen_flat(N, 10.0),
}
betas = [0.125, 0.25, 0.5, 0.75, 0.875]

# %%
rows = []
for name, op in operators.items():
    for beta in betas:
        picks = [logdetective(op.view(), 400, 10, beta, s).branch for s in range(SEEDS)]
        share = picks.count("one_sample") / SEEDS
        rows.append((name, beta, share))
        print(f"{name:12s} beta={beta:<6g} one-sample share {share:.2f}")

with open(OUT / "switching.csv", "w", newline="") as fh:
    w = csv.writer(fh)
    w.writerow(["matrix", "beta", "one_sample_share"])
    w.writerows(rows)
