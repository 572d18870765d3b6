"""Lanczos tridiagonalization and Gauss quadrature for ``w^T log(B) w``."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .operator import NumericalDomainError, SpsdOperator, ValidationError

BREAKDOWN_TOL = 1e-14
RITZ_FLOOR = 1e-14


@dataclass(frozen=True)
class TridiagonalMatrix:
    alpha: np.ndarray
    beta: np.ndarray

    @property
    def size(self) -> int:
        return self.alpha.size

    def dense(self) -> np.ndarray:
        return np.diag(self.alpha) + np.diag(self.beta, 1) + np.diag(self.beta, -1)

    def eigh(self) -> tuple[np.ndarray, np.ndarray]:
        if self.size == 1:
            return self.alpha.copy(), np.ones((1, 1))
        return sla.eigh_tridiagonal(self.alpha, self.beta)


@dataclass(frozen=True)
class QuadFormResult:
    value: float
    m_used: int
    w_norm_sq: float


def lanczos_tridiag(
    op: SpsdOperator, w: np.ndarray, m: int, full_reorth: bool = True, return_basis: bool = False
):
    """Run ``m`` Lanczos steps on ``op`` from the starting vector ``w``.

    Each step costs one product with ``op``.  If an off-diagonal entry
    falls below ``1e-14`` times the largest coefficient seen so far, the
    Krylov space is treated as invariant and the recurrence stops early;
    the returned matrix then has fewer than ``m`` rows.
    """
    w = np.asarray(w, dtype=float)
    if m < 1:
        raise ValidationError(f"number of Lanczos steps must be positive, got {m}")
    w_norm = np.linalg.norm(w)
    if w_norm == 0.0:
        raise ValidationError("Lanczos starting vector is zero")
    m = min(m, op.dim)
    V = np.zeros((op.dim, m))
    alpha, beta = [], []
    v = w / w_norm
    v_prev = np.zeros_like(v)
    b_prev = 0.0
    scale = 0.0
    for j in range(m):
        V[:, j] = v
        z = op.apply(v)
        a = float(v @ z)
        alpha.append(a)
        z = z - a * v - b_prev * v_prev
        if full_reorth:
            Vj = V[:, : j + 1]
            z -= Vj @ (Vj.T @ z)
            z -= Vj @ (Vj.T @ z)
        scale = max(scale, abs(a), b_prev)
        if j == m - 1:
            break
        b = float(np.linalg.norm(z))
        if b <= BREAKDOWN_TOL * scale:
            break
        beta.append(b)
        v_prev, v, b_prev = v, z / b, b
    T = TridiagonalMatrix(np.array(alpha), np.array(beta))
    if return_basis:
        return T, V[:, : T.size]
    return T


def quad_form_log(
    op: SpsdOperator, w: np.ndarray, m: int, full_reorth: bool = True, shift: float = 0.0
) -> QuadFormResult:
    """Gauss quadrature estimate ``||w||^2 e_1^T log(T_m) e_1 ~ w^T log(B) w``.

    With ``shift`` nonzero the quadrature targets ``w^T log(shift*I + B) w``
    while Lanczos runs on ``B`` alone.  For ``shift = 1`` the nodes go
    through ``log1p``, so a residual operator that is exactly zero gives
    exactly zero and eigenvalues near one lose no digits.
    """
    w = np.asarray(w, dtype=float)
    T = lanczos_tridiag(op, w, m, full_reorth=full_reorth)
    theta, S = T.eigh()
    shifted = theta + shift
    bad = shifted[shifted <= RITZ_FLOOR]
    if bad.size:
        raise NumericalDomainError(
            f"Ritz value {bad[0]:.3e} is not positive; log is undefined"
        )
    w_norm_sq = float(w @ w)
    logs = np.log1p(theta) if shift == 1.0 else np.log(shifted)
    value = w_norm_sq * float(np.sum(S[0] ** 2 * logs))
    return QuadFormResult(value, T.size, w_norm_sq)


def lanczos_error_bound(kappa: float, m: int, w_norm_sq: float) -> float:
    """A-priori bound on the quadrature error for a matrix of condition ``kappa``.

    ``c * ||w||^2 * ((sqrt(kappa+1) - 1) / (sqrt(kappa+1) + 1))^(2m)`` with
    ``c = 2 (sqrt(kappa+1) + 1) log(2 kappa)``.
    """
    if kappa < 1:
        raise ValidationError(f"condition number must be >= 1, got {kappa}")
    if m < 1:
        raise ValidationError(f"m must be >= 1, got {m}")
    s = math.sqrt(kappa + 1.0)
    c = 2.0 * (s + 1.0) * math.log(2.0 * kappa)
    return c * w_norm_sq * ((s - 1.0) / (s + 1.0)) ** (2 * m)
