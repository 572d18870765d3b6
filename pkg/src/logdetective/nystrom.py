"""Randomized Nyström approximation and the preconditioner it induces."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.linalg as sla

from .operator import DimensionError, SpsdOperator, ValidationError

EPS = np.finfo(float).eps
MAX_SHIFT_RETRIES = 3


@dataclass(frozen=True)
class NystromFactors:
    """Eigenform ``U diag(lam_hat) U^T`` of a Nyström approximation.

    The Gaussian test matrix ``omega`` and the sketch ``sketch = A @ omega``
    are kept so the approximation can be enlarged without recomputing them.
    ``shift`` is the stabilization shift that was used.
    """

    U: np.ndarray
    lam_hat: np.ndarray
    omega: np.ndarray
    sketch: np.ndarray
    shift: float

    @property
    def rank(self) -> int:
        return self.omega.shape[1]

    @property
    def dim(self) -> int:
        return self.omega.shape[0]

    def dense(self) -> np.ndarray:
        return (self.U * self.lam_hat) @ self.U.T


@dataclass(frozen=True)
class FrobeniusErrorEstimate:
    value: float
    rank_used: int


class CholeskyBreakdown(np.linalg.LinAlgError):
    pass


def _shifted_cholesky(omega, Y, shift):
    """Upper Cholesky factor of ``omega^T (Y + shift*omega)``, escalating the shift."""
    for _ in range(MAX_SHIFT_RETRIES + 1):
        Y_nu = Y + shift * omega
        G = omega.T @ Y_nu
        G = 0.5 * (G + G.T)
        try:
            return sla.cholesky(G, lower=False), Y_nu, shift
        except np.linalg.LinAlgError:
            shift = 10.0 * shift if shift > 0 else EPS
    raise CholeskyBreakdown(
        f"Cholesky of the core matrix failed after {MAX_SHIFT_RETRIES} shift escalations"
    )


def _factors_from_sketch(omega: np.ndarray, Y: np.ndarray) -> NystromFactors:
    n, ell = omega.shape
    if ell == 0:
        return NystromFactors(np.zeros((n, 0)), np.zeros(0), omega, Y, 0.0)
    # The approximation depends only on range(omega), so work with an
    # orthonormal basis Q = omega R^{-1} and its sketch Y R^{-1}.  This keeps
    # the stabilizing shift at eps * ||A Q||_F instead of eps * ||A omega||_F.
    Q, R = np.linalg.qr(omega)
    YQ = sla.solve_triangular(R, Y.T, trans="T", lower=False).T
    shift = EPS * np.linalg.norm(YQ)
    if shift == 0.0:
        # A vanishes on range(omega); the approximation is exactly zero
        return NystromFactors(Q, np.zeros(ell), omega, Y, 0.0)
    C, Y_nu, shift = _shifted_cholesky(Q, YQ, shift)
    B = sla.solve_triangular(C, Y_nu.T, trans="T", lower=False).T
    U, s, _ = np.linalg.svd(B, full_matrices=False)
    lam_hat = np.maximum(s**2 - shift, 0.0)
    return NystromFactors(U, lam_hat, omega, Y, float(shift))


def nystrom_build(op: SpsdOperator, omega: np.ndarray) -> NystromFactors:
    """Nyström approximation ``A omega (omega^T A omega)^+ omega^T A``.

    Uses exactly ``omega.shape[1]`` products with ``op``.  The sketch is
    rewritten in an orthonormal basis ``Q`` of ``range(omega)`` (no extra
    products), the core matrix is stabilized by adding ``shift * Q`` with
    ``shift = eps * ||A Q||_F``, and the shift is subtracted from the
    squared singular values at the end.
    """
    omega = np.asarray(omega, dtype=float)
    if omega.ndim != 2 or omega.shape[0] != op.dim:
        raise DimensionError(f"test matrix of shape {omega.shape} does not match n={op.dim}")
    if omega.shape[1] > op.dim:
        raise DimensionError(f"rank {omega.shape[1]} exceeds dimension {op.dim}")
    Y = op.apply(omega)
    return _factors_from_sketch(omega, Y)


def nystrom_update(factors: NystromFactors, op: SpsdOperator, psi: np.ndarray) -> NystromFactors:
    """Enlarge the test matrix to ``[omega, psi]``, reusing the stored sketch.

    Only ``psi.shape[1]`` new products are computed; the result matches
    :func:`nystrom_build` on the concatenated test matrix.
    """
    psi = np.asarray(psi, dtype=float)
    if psi.ndim != 2 or psi.shape[0] != factors.dim:
        raise DimensionError(f"psi of shape {psi.shape} does not match n={factors.dim}")
    if psi.shape[1] == 0:
        return factors
    if factors.rank + psi.shape[1] > factors.dim:
        raise DimensionError("enlarged rank exceeds the dimension")
    Y_new = op.apply(psi)
    omega = np.hstack([factors.omega, psi])
    Y = np.hstack([factors.sketch, Y_new])
    return _factors_from_sketch(omega, Y)


def leave_one_out_error(
    omega: np.ndarray, sketch: np.ndarray, rank: Optional[int] = None
) -> FrobeniusErrorEstimate:
    """Leave-one-out estimate of ``||A - A_hat||_F`` from a stored sketch.

    With ``G = omega^T A omega`` and ``S = G^{-1}``, leaving column ``i`` out
    gives the residual ``(A - A_hat_{-i}) omega_i = (Y S)_{:, i} / S_ii``,
    so all residuals cost one Cholesky factorization and no products with
    ``A``.  ``rank`` restricts the estimate to the leading columns of the
    sketch.
    """
    omega = np.asarray(omega, dtype=float)
    Y = np.asarray(sketch, dtype=float)
    r = omega.shape[1] if rank is None else int(rank)
    if r < 2:
        raise ValidationError("leave-one-out needs at least two sketch columns")
    if r > omega.shape[1]:
        raise DimensionError(f"rank {r} exceeds the {omega.shape[1]} available columns")
    omega, Y = omega[:, :r], Y[:, :r]
    shift = EPS * np.linalg.norm(Y)
    if shift == 0.0:
        return FrobeniusErrorEstimate(0.0, r)
    C, Y_nu, shift = _shifted_cholesky(omega, Y, shift)
    Cinv = sla.solve_triangular(C, np.eye(r), lower=False)
    S_diag = np.einsum("ij,ij->i", Cinv, Cinv)
    # Y_nu S = (Y_nu C^{-1}) C^{-T}
    W = (Y_nu @ Cinv) @ Cinv.T
    # residuals of the shifted matrix A + shift*I; drop the shift from them
    R = W / S_diag - shift * omega
    value = math.sqrt(np.sum(R * R) / r)
    return FrobeniusErrorEstimate(value, r)


def trace_log_preconditioner(factors: NystromFactors) -> float:
    """Return ``trace log(A_hat + I) = sum(log1p(lam_hat))``."""
    return math.fsum(np.log1p(factors.lam_hat))


def apply_precond_power(factors: NystromFactors, v: np.ndarray, power: float) -> np.ndarray:
    """Apply ``(A_hat + I)^power`` without touching ``A``."""
    v = np.asarray(v, dtype=float)
    coef = (1.0 + factors.lam_hat) ** power - 1.0
    proj = factors.U.T @ v
    if v.ndim == 1:
        return v + factors.U @ (coef * proj)
    return v + factors.U @ (coef[:, None] * proj)


def apply_precond_inv_sqrt(factors: NystromFactors, v: np.ndarray) -> np.ndarray:
    """Apply ``(A_hat + I)^{-1/2}``."""
    return apply_precond_power(factors, v, -0.5)


def preconditioned_operator(op: SpsdOperator, factors: NystromFactors) -> SpsdOperator:
    """``M_hat = P^{-1/2} (A + I) P^{-1/2}`` with ``P = A_hat + I``.

    One product with ``M_hat`` costs one product with ``op``.  The dense
    form (oracle only) is assembled as ``I + P^{-1/2} (A - A_hat) P^{-1/2}``;
    :func:`preconditioned_residual_dense` returns the part without ``I``,
    which keeps eigenvalues close to one resolvable in floating point.
    """
    if op.dim != factors.dim:
        raise DimensionError("operator and Nyström factors have different sizes")

    def matmat(V):
        X = apply_precond_inv_sqrt(factors, V)
        X = op.apply(X) + X
        return apply_precond_inv_sqrt(factors, X)

    def dense():
        return preconditioned_residual_dense(op, factors) + np.eye(op.dim)

    return SpsdOperator(
        op.dim, matmat, dense=dense if op.has_dense else None, name=f"Mhat({op.name})"
    )


def preconditioned_residual_dense(op: SpsdOperator, factors: NystromFactors) -> np.ndarray:
    """Dense ``M_hat - I = P^{-1/2} (A - A_hat) P^{-1/2}`` (oracle only)."""
    E = op.dense() - factors.dense()
    E = apply_precond_inv_sqrt(factors, E)
    E = apply_precond_inv_sqrt(factors, E.T)
    return 0.5 * (E + E.T)
