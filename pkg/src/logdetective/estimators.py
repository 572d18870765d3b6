"""Log-determinant estimators with strict matvec accounting.

Every estimator estimates ``trace log(A + I)`` and reports how many
products with ``A`` it consumed (measured on the operator's counter).

Random streams are keyed on the ``seed`` argument: the Nyström test
matrix uses stream ``(seed, 0)``, its enlargement ``(seed, 1)`` and
probe ``i`` uses ``(seed, 2, i)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .lanczos import quad_form_log
from .nystrom import (
    leave_one_out_error,
    nystrom_build,
    nystrom_update,
    preconditioned_operator,
    trace_log_preconditioner,
)
from .operator import SpsdOperator, ValidationError, make_rng

OMEGA_STREAM, PSI_STREAM, PROBE_STREAM = 0, 1, 2

BRANCHES = ("one_sample", "mixed", "lowrank", "plain_slq", "half_samples")


@dataclass
class EstimateResult:
    """Estimate ``value = t1 + t2`` of ``trace log(A + I)``."""

    value: float
    t1: float
    t2: float
    matvecs_used: int
    branch: str
    diagnostics: dict = field(default_factory=dict)


def floor_rank(fraction: float, ell: int) -> int:
    """``floor(fraction * ell)``, robust to products like ``0.29 * 100``."""
    return int(math.floor(fraction * ell + 1e-9))


def _omega(n, cols, seed):
    return make_rng(seed, OMEGA_STREAM).standard_normal((n, cols))


def _probe(n, seed, i):
    return make_rng(seed, PROBE_STREAM, i).standard_normal(n)


def _quadratures(R: SpsdOperator, n_probes: int, m: int, seed) -> list:
    # R is the residual B - I; the quadrature adds the identity back via log1p
    return [quad_form_log(R, _probe(R.dim, seed, i), m, shift=1.0).value for i in range(n_probes)]


def _minus_identity(B: SpsdOperator) -> SpsdOperator:
    return SpsdOperator(B.dim, lambda V: B.apply(V) - V, name=f"{B.name}-I")


def _preconditioned_slq(op, rank, n_probes, m, seed, branch, factors=None):
    start = op.matvecs
    if n_probes < 1:
        raise ValidationError("the budget leaves no room for a single probe")
    if factors is None and rank > 0:
        factors = nystrom_build(op, _omega(op.dim, rank, seed))
    if factors is None:
        t1 = 0.0
        R = op
    else:
        t1 = trace_log_preconditioner(factors)
        R = _minus_identity(preconditioned_operator(op, factors))
    quads = _quadratures(R, n_probes, m, seed)
    t2 = math.fsum(quads) / n_probes
    diagnostics = {
        "rank": 0 if factors is None else factors.rank,
        "probes": n_probes,
        "quadratures": quads,
    }
    return EstimateResult(t1 + t2, t1, t2, op.matvecs - start, branch, diagnostics)


def estimate_plain_slq(op: SpsdOperator, N: int, m: int, seed) -> EstimateResult:
    """Stochastic Lanczos quadrature on ``A + I`` with ``N`` Gaussian probes.

    Uses ``N * m`` products (fewer if Lanczos terminates early).
    """
    if N < 1:
        raise ValidationError(f"need at least one probe, got N={N}")
    return _preconditioned_slq(op, 0, N, m, seed, "plain_slq")


def estimate_lowrank(op: SpsdOperator, rank_budget: int, seed) -> EstimateResult:
    """``trace log(A_hat + I)`` for a Nyström approximation of rank ``rank_budget``.

    Never overestimates (up to roundoff), since ``A_hat`` is below ``A``
    in the Loewner order.
    """
    if rank_budget < 1:
        raise ValidationError(f"rank budget must be positive, got {rank_budget}")
    start = op.matvecs
    factors = nystrom_build(op, _omega(op.dim, rank_budget, seed))
    t1 = trace_log_preconditioner(factors)
    return EstimateResult(t1, t1, 0.0, op.matvecs - start, "lowrank", {"rank": rank_budget})


def estimate_one_sample(op: SpsdOperator, ell: int, m: int, seed) -> EstimateResult:
    """Rank-``ell`` Nyström preconditioner plus a single SLQ probe."""
    if ell < 1 or m < 1:
        raise ValidationError(f"need ell >= 1 and m >= 1, got ell={ell}, m={m}")
    return _preconditioned_slq(op, ell, 1, m, seed, "one_sample")


def estimate_alpha_rank(op: SpsdOperator, ell: int, m: int, alpha: float, seed) -> EstimateResult:
    """Rank ``floor(alpha*ell)`` preconditioner, remaining budget spent on probes.

    The number of probes is ``floor((ell + m - rank) / m)``, so the total
    stays within ``ell + m``.  ``alpha = 0`` is plain SLQ on ``A + I``.
    """
    if not 0.0 <= alpha <= 1.0:
        raise ValidationError(f"alpha must lie in [0, 1], got {alpha}")
    rank = floor_rank(alpha, ell)
    n_probes = (ell + m - rank) // m
    branch = "plain_slq" if rank == 0 else "mixed"
    return _preconditioned_slq(op, rank, n_probes, m, seed, branch)


def estimate_half_samples(op: SpsdOperator, ell: int, m: int, seed) -> EstimateResult:
    """Split the budget ``ell + m`` evenly between preconditioner and probes."""
    rank = (ell + m) // 2
    n_probes = (ell + m - rank) // m
    return _preconditioned_slq(op, rank, n_probes, m, seed, "half_samples")


def switching_condition(
    errF_small: float, errF_large: float, ell: int, m: int, beta: float
) -> bool:
    """True when the one-sample strategy should be used.

    Compares ``m / ((1-beta) beta ell + m) * errF_small**2`` against
    ``errF_large**2``; ties choose one-sample.
    """
    lhs = m / ((1.0 - beta) * beta * ell + m) * errF_small**2
    return bool(lhs >= errF_large**2)


def logdetective(op: SpsdOperator, ell: int, m: int, beta: float, seed) -> EstimateResult:
    """Adaptive budget allocation between preconditioning and probing.

    Builds a rank ``floor(beta*ell)`` Nyström approximation, estimates its
    Frobenius error and that of the rank ``floor(beta**2 * ell)``
    approximation on the leading sketch columns, then either enlarges the
    approximation to rank ``ell`` and uses one probe, or keeps the smaller
    rank and averages ``floor((ell + m - floor(beta*ell)) / m)`` probes.
    """
    if not 0.0 < beta < 1.0:
        raise ValidationError(f"beta must lie in (0, 1), got {beta}")
    r_large = floor_rank(beta, ell)
    r_small = floor_rank(beta * beta, ell)
    if r_small < 2:
        raise ValidationError(f"floor(beta^2 * ell) = {r_small} < 2; increase ell or beta")
    start = op.matvecs
    factors = nystrom_build(op, _omega(op.dim, r_large, seed))
    diagnostics = {"rank_small": r_small, "rank_large": r_large}
    try:
        err_large = leave_one_out_error(factors.omega, factors.sketch).value
        err_small = leave_one_out_error(factors.omega, factors.sketch, rank=r_small).value
        diagnostics.update(errF_small=err_small, errF_large=err_large)
        one_sample = switching_condition(err_small, err_large, ell, m, beta)
    except np.linalg.LinAlgError as exc:
        diagnostics["loo_failed"] = str(exc)
        one_sample = True

    if one_sample:
        psi = make_rng(seed, PSI_STREAM).standard_normal((op.dim, ell - r_large))
        factors = nystrom_update(factors, op, psi)
        res = _preconditioned_slq(op, ell, 1, m, seed, "one_sample", factors=factors)
    else:
        n_probes = (ell + m - r_large) // m
        res = _preconditioned_slq(op, r_large, n_probes, m, seed, "mixed", factors=factors)
        diagnostics["unused_budget"] = ell + m - r_large - n_probes * m
    res.diagnostics.update(diagnostics)
    res.matvecs_used = op.matvecs - start
    return res


def budget_formula(strategy: str, ell: int, m: int, *, alpha=None, beta=None, branch=None) -> int:
    """Documented matvec count of a strategy, assuming no Lanczos breakdown."""
    if strategy == "plain_slq":
        return ((ell + m) // m) * m
    if strategy == "lowrank":
        return ell + m
    if strategy == "one_sample":
        return ell + m
    if strategy == "half_samples":
        r = (ell + m) // 2
        return r + ((ell + m - r) // m) * m
    if strategy == "alpha_rank":
        r = floor_rank(alpha, ell)
        return r + ((ell + m - r) // m) * m
    if strategy == "logdetective":
        if branch == "one_sample":
            return ell + m
        r = floor_rank(beta, ell)
        return r + ((ell + m - r) // m) * m
    raise ValueError(f"unknown strategy {strategy!r}")


def run_strategy(op: SpsdOperator, strategy: str, ell: int, m: int, seed, **params) -> EstimateResult:
    """Dispatch by name with a common ``(ell, m)`` budget convention.

    ``plain_slq`` uses ``floor((ell + m) / m)`` probes and ``lowrank`` a
    rank ``ell + m`` approximation, so every strategy spends at most
    ``ell + m`` products.
    """
    if strategy == "plain_slq":
        return estimate_plain_slq(op, (ell + m) // m, m, seed)
    if strategy == "lowrank":
        return estimate_lowrank(op, ell + m, seed)
    if strategy == "one_sample":
        return estimate_one_sample(op, ell, m, seed)
    if strategy == "half_samples":
        return estimate_half_samples(op, ell, m, seed)
    if strategy == "alpha_rank":
        return estimate_alpha_rank(op, ell, m, params["alpha"], seed)
    if strategy == "logdetective":
        return logdetective(op, ell, m, params.get("beta", 0.75), seed)
    raise ValueError(f"unknown strategy {strategy!r}")
