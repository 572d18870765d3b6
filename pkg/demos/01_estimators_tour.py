"""
A tour of the log-determinant estimators
========================================

Every estimator targets ``trace log(A + I)`` for a symmetric positive
semidefinite ``A`` that is only available through products ``A @ v``.
The budget is counted in such products.
"""

# %%
import numpy as np

from logdetective import (
    estimate_alpha_rank,
    estimate_half_samples,
    estimate_lowrank,
    estimate_one_sample,
    estimate_plain_slq,
    gen_algebraic,
    logdetective,
    trace_log_exact,
)

A = gen_algebraic(2000)  # eigenvalues i**-2 / 1e-2
exact = trace_log_exact(A.spectrum())
print(f"trace log(A + I) = {exact:.10f}")

# %%
# A budget of ell + m products: ell for the Nystrom sketch, m for one
# Lanczos run.  Each call below starts from a fresh counter.
ell, m, seed = 190, 10, 0
runs = {
    "plain SLQ (20 probes x 10 steps)": lambda: estimate_plain_slq(A.view(), 20, m, seed),
    "low-rank (rank 200)": lambda: estimate_lowrank(A.view(), ell + m, seed),
    "one-sample": lambda: estimate_one_sample(A.view(), ell, m, seed),
    "alpha-rank, alpha = 1/2": lambda: estimate_alpha_rank(A.view(), ell, m, 0.5, seed),
    "half-samples": lambda: estimate_half_samples(A.view(), ell, m, seed),
    "log-det-ective, beta = 3/4": lambda: logdetective(A.view(), ell, m, 0.75, seed),
}
for name, run in runs.items():
    res = run()
    err = abs(res.value - exact) / exact
    print(f"{name:34s} rel.err {err:.2e}  matvecs {res.matvecs_used:4d}  branch {res.branch}")

# %%
# The estimate splits as value = t1 + t2: the log-determinant of the
# preconditioner and a stochastic estimate of the preconditioned residual.
res = estimate_one_sample(A.view(), ell, m, seed)
print(f"t1 = {res.t1:.6f}, t2 = {res.t2:.3e}, sum = {res.value:.6f}")

# %%
# Averaging over seeds shows the spread rather than a single draw.
errs = np.array([estimate_one_sample(A.view(), ell, m, s).value - exact for s in range(50)])
print(f"one-sample over 50 seeds: mean {errs.mean():+.2e}, std {errs.std(ddof=1):.2e}")
