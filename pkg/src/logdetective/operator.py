"""Matvec-only SPSD operators, seeded Gaussian sampling and dense oracles."""

from __future__ import annotations

import math
import threading
from typing import Callable, Optional, Sequence, Union

import numpy as np

DENSE_LIMIT = 8192

SeedLike = Union[int, Sequence[int]]


class DimensionError(ValueError):
    """Invalid dimensions passed to a sampler or operator."""


class ValidationError(ValueError):
    """Input violates a documented precondition."""


class NumericalDomainError(ArithmeticError):
    """A quantity left the domain where the computation is defined."""


def make_rng(seed: SeedLike, *key: int) -> np.random.Generator:
    """Counter-based generator for the stream ``(seed, *key)``.

    Streams are derived with :class:`numpy.random.SeedSequence` spawn keys
    and drive a Philox bit generator, so stream ``(s, 2, 7)`` is the same
    no matter which other streams were drawn before it.
    """
    if isinstance(seed, (int, np.integer)):
        entropy, base_key = int(seed), ()
    else:
        seed = tuple(int(s) for s in seed)
        entropy, base_key = seed[0], seed[1:]
    if entropy < 0:
        entropy &= (1 << 64) - 1
    ss = np.random.SeedSequence(entropy, spawn_key=tuple(base_key) + tuple(key))
    return np.random.Generator(np.random.Philox(ss))


def sample_gaussian_matrix(n: int, ell: int, seed: SeedLike) -> np.ndarray:
    """Draw an ``n x ell`` matrix of i.i.d. standard normal entries.

    Normals come from numpy's ziggurat sampler over a Philox stream; the
    same ``seed`` always yields bit-identical entries.
    """
    if n < 1 or ell < 0:
        raise DimensionError(f"invalid Gaussian matrix shape ({n}, {ell})")
    return make_rng(seed).standard_normal((n, ell))


class SpsdOperator:
    """Symmetric positive semidefinite matrix accessed through products.

    Parameters
    ----------
    dim : int
        Size ``n`` of the (square) operator.
    matmat : callable
        Maps an ``(n,)`` vector or ``(n, k)`` block to its product with A.
    dense : ndarray or callable, optional
        Explicit matrix, or a zero-argument callable materializing it.
        Only oracles use it.
    eigenvalues : array_like, optional
        Known spectrum (descending), used by oracles instead of ``eigh``.

    Every product counts towards :attr:`matvecs`: one for a vector, ``k``
    for an ``(n, k)`` block.
    """

    def __init__(
        self,
        dim: int,
        matmat: Callable[[np.ndarray], np.ndarray],
        dense: Union[np.ndarray, Callable[[], np.ndarray], None] = None,
        eigenvalues: Optional[np.ndarray] = None,
        name: str = "A",
    ):
        if dim < 1:
            raise DimensionError(f"operator dimension must be positive, got {dim}")
        self.dim = int(dim)
        self.name = name
        self._matmat = matmat
        self._dense = dense
        self._eigenvalues = None if eigenvalues is None else np.asarray(eigenvalues, float)
        self._count = 0
        self._lock = threading.Lock()

    @classmethod
    def from_dense(cls, M, name: str = "A") -> "SpsdOperator":
        M = np.asarray(M, dtype=float)
        if M.ndim != 2 or M.shape[0] != M.shape[1]:
            raise DimensionError(f"expected a square matrix, got shape {M.shape}")
        return cls(M.shape[0], lambda V: M @ V, dense=M, name=name)

    @classmethod
    def from_spectrum(
        cls, eigenvalues, rotation_seed: Optional[SeedLike] = None, name: str = "A"
    ) -> "SpsdOperator":
        """Diagonal operator, or ``Q diag(eigenvalues) Q^T`` for a random ``Q``."""
        lam = np.sort(np.asarray(eigenvalues, dtype=float))[::-1].copy()
        if lam.size and lam[-1] < -1e-12 * max(1.0, abs(lam[0])):
            raise ValidationError("eigenvalues of an SPSD operator must be >= 0")
        lam = np.maximum(lam, 0.0)
        n = lam.size
        if rotation_seed is None:
            def matmat(V):
                return lam * V if V.ndim == 1 else lam[:, None] * V

            return cls(n, matmat, dense=lambda: np.diag(lam), eigenvalues=lam, name=name)
        Q = random_orthogonal(n, rotation_seed)
        M = (Q * lam) @ Q.T
        M = 0.5 * (M + M.T)
        return cls(n, lambda V: M @ V, dense=M, eigenvalues=lam, name=name)

    @property
    def matvecs(self) -> int:
        return self._count

    @property
    def has_dense(self) -> bool:
        return self._dense is not None

    def apply(self, v: np.ndarray) -> np.ndarray:
        v = np.asarray(v, dtype=float)
        if v.shape[0] != self.dim or v.ndim > 2:
            raise DimensionError(f"cannot apply {self.dim}x{self.dim} operator to shape {v.shape}")
        k = 1 if v.ndim == 1 else v.shape[1]
        with self._lock:
            self._count += k
        if k == 0:
            return np.zeros_like(v)
        return np.asarray(self._matmat(v), dtype=float)

    __matmul__ = apply

    def dense(self) -> np.ndarray:
        """Explicit matrix (oracle access, not counted as matvecs)."""
        if self._dense is None:
            raise ValidationError(f"operator {self.name!r} has no dense access")
        if callable(self._dense):
            self._dense = np.asarray(self._dense(), dtype=float)
        return self._dense

    def spectrum(self) -> np.ndarray:
        """Eigenvalues in descending order, analytic when known."""
        if self._eigenvalues is None:
            self._eigenvalues = dense_eigh(self.dense())[0]
        return self._eigenvalues

    def view(self) -> "SpsdOperator":
        """Same matrix with an independent matvec counter.

        The dense matrix and spectrum caches are shared with ``self``.
        """
        twin = SpsdOperator.__new__(SpsdOperator)
        twin.__dict__.update(self.__dict__)
        twin._count = 0
        twin._lock = threading.Lock()
        if callable(self._dense):
            twin._dense = lambda: self.dense()
        return twin

    def __repr__(self) -> str:
        return f"SpsdOperator(name={self.name!r}, dim={self.dim}, matvecs={self._count})"


def shifted_identity(op: SpsdOperator) -> SpsdOperator:
    """The operator ``A + I``; each product costs one product with ``A``."""

    def matmat(V):
        return op.apply(V) + V

    def dense():
        return op.dense() + np.eye(op.dim)

    eig = None if op._eigenvalues is None else op._eigenvalues + 1.0
    return SpsdOperator(
        op.dim, matmat, dense=dense if op.has_dense else None, eigenvalues=eig, name=f"{op.name}+I"
    )


def random_orthogonal(n: int, seed: SeedLike) -> np.ndarray:
    """Haar-distributed orthogonal matrix (QR of a Gaussian, sign-fixed)."""
    Z = sample_gaussian_matrix(n, n, seed)
    Q, R = np.linalg.qr(Z)
    return Q * np.sign(np.diag(R))


def dense_eigh(M) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a symmetric matrix, eigenvalues descending.

    Negative eigenvalues are clamped to zero, since every caller feeds
    SPSD matrices and roundoff can produce tiny negative values.
    """
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {M.shape}")
    n = M.shape[0]
    if n > DENSE_LIMIT:
        raise DimensionError(f"dense eigendecomposition refused for n={n} > {DENSE_LIMIT}")
    scale = np.max(np.abs(M)) if M.size else 0.0
    if np.max(np.abs(M - M.T), initial=0.0) > 1e-12 * max(scale, np.finfo(float).tiny):
        raise ValidationError("matrix is not symmetric")
    lam, U = np.linalg.eigh(0.5 * (M + M.T))
    lam, U = lam[::-1], U[:, ::-1]
    return np.maximum(lam, 0.0), U


def trace_log_exact(eigenvalues) -> float:
    """Return ``sum(log(1 + lambda_i))`` with compensated summation."""
    lam = np.asarray(eigenvalues, dtype=float)
    if lam.size and lam.min() < -1e-12:
        raise ValidationError(f"negative eigenvalue {lam.min():.3e} in SPSD spectrum")
    return math.fsum(np.log1p(np.maximum(lam, 0.0)))
