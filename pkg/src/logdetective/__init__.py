"""Preconditioned stochastic estimation of ``log det(A + I)`` for SPSD ``A``."""

from .bounds import (
    TailSpectrum,
    bound_alpha_rank,
    bound_lowrank,
    bound_one_sample,
    ideal_alpha_rank_var,
    ideal_lowrank_err,
    ideal_one_sample_var,
    optimize_split,
)
from .estimators import (
    EstimateResult,
    estimate_alpha_rank,
    estimate_half_samples,
    estimate_lowrank,
    estimate_one_sample,
    estimate_plain_slq,
    logdetective,
    switching_condition,
)
from .lanczos import lanczos_error_bound, lanczos_tridiag, quad_form_log
from .nystrom import (
    NystromFactors,
    apply_precond_inv_sqrt,
    leave_one_out_error,
    nystrom_build,
    nystrom_update,
    preconditioned_operator,
    trace_log_preconditioner,
)
from .operator import (
    SpsdOperator,
    dense_eigh,
    sample_gaussian_matrix,
    shifted_identity,
    trace_log_exact,
)
from .testmat import MatrixSpec, gen_algebraic, gen_flat, gen_gaps, gen_geometric, gen_matern, gen_rbf

__version__ = "0.1.0"
