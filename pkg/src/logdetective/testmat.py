"""Test operators ``A = H / mu`` with controlled spectral decay.

Synthetic families (``alg``, ``geom``) are diagonal: every estimator here
is invariant under orthogonal similarity, so the rotation is skipped
unless ``rotation_seed`` is given.  Kernel families sample points from
``N(0, I_d)`` and are materialized densely.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np
import scipy.sparse as sp
from scipy.spatial.distance import pdist, squareform

from .operator import SpsdOperator, ValidationError, make_rng

FAMILIES = ("alg", "geom", "gaps", "rbf", "matern", "rbf_d", "matern_d", "flat")
# the d-dimensional kernel names are aliases; the dimension comes from ``d``
ALIASES = {"rbf_d": "rbf", "matern_d": "matern"}
MATERN_NUS = (0.5, 1.5, 2.5)

# family defaults for the regularization parameter
DEFAULT_MU = {"alg": 1e-2, "geom": 1e-4, "gaps": 1e-6, "rbf": 1e-2, "matern": 1e-2, "flat": 1.0}
DEFAULT_MU.update({k: DEFAULT_MU[v] for k, v in ALIASES.items()})


def gen_algebraic(n: int, mu: float = 1e-2, rotation_seed=None) -> SpsdOperator:
    """Eigenvalues ``i**-2 / mu``, ``i = 1..n``."""
    i = np.arange(1, n + 1, dtype=float)
    return SpsdOperator.from_spectrum(i**-2 / mu, rotation_seed, name=f"alg(n={n})")


def gen_geometric(n: int, mu: float = 1e-4, rotation_seed=None) -> SpsdOperator:
    """Eigenvalues ``exp(-0.1 i) / mu``, ``i = 1..n``."""
    i = np.arange(1, n + 1, dtype=float)
    return SpsdOperator.from_spectrum(np.exp(-0.1 * i) / mu, rotation_seed, name=f"geom(n={n})")


def gen_flat(n: int, c: float = 10.0) -> SpsdOperator:
    """``c * I``; ``c = 0`` gives the zero operator."""
    return SpsdOperator.from_spectrum(np.full(n, float(c)), name=f"flat(n={n},c={c})")


def gaps_coefficients(k: int) -> np.ndarray:
    """Weights ``gamma_j``: four blocks ``10^2, 1, 10^-2, 10^-6`` times ``j**-2``."""
    j = np.arange(1, k + 1, dtype=float)
    scale = np.select([j <= 200, j <= 400, j <= 600], [1e2, 1.0, 1e-2], default=1e-6)
    return scale / j**2


def gaps_operator(X, gammas, mu: float = 1.0, name: str = "gaps") -> SpsdOperator:
    """``(1/mu) sum_j gamma_j x_j x_j^T`` for the columns ``x_j`` of ``X``."""
    X = sp.csc_matrix(X)
    gammas = np.asarray(gammas, dtype=float)
    n = X.shape[0]
    w = gammas / mu

    def matmat(V):
        Z = X.T @ V
        Z = w * Z if V.ndim == 1 else w[:, None] * Z
        return np.asarray(X @ Z)

    def dense():
        Xd = X.toarray()
        H = (Xd * w) @ Xd.T
        return 0.5 * (H + H.T)

    return SpsdOperator(n, matmat, dense=dense, name=name)


def gen_gaps(
    n: int, k_terms: Optional[int] = None, density: float = 1e-2, mu: float = 1e-6, seed: int = 0
) -> SpsdOperator:
    """Sum of ``k_terms`` weighted rank-one terms built from sparse random vectors.

    Each vector has ``max(1, round(density * n))`` nonzeros at uniformly
    chosen positions with standard normal values, scaled to unit norm.
    """
    k = n if k_terms is None else int(k_terms)
    if not 0.0 < density <= 1.0:
        raise ValidationError(f"density must lie in (0, 1], got {density}")
    if not 1 <= k <= n:
        raise ValidationError(f"k_terms must lie in [1, n], got {k}")
    rng = make_rng(seed)
    nnz = max(1, int(round(density * n)))
    rows = np.concatenate([rng.choice(n, nnz, replace=False) for _ in range(k)])
    vals = rng.standard_normal((k, nnz))
    vals /= np.linalg.norm(vals, axis=1, keepdims=True)
    cols = np.repeat(np.arange(k), nnz)
    X = sp.csc_matrix((vals.ravel(), (rows, cols)), shape=(n, k))
    return gaps_operator(X, gaps_coefficients(k), mu, name=f"gaps(n={n})")


def _points(n, d, seed):
    return make_rng(seed).standard_normal((n, d))


def _kernel_operator(K, mu, name):
    K = K / mu
    return SpsdOperator(K.shape[0], lambda V: K @ V, dense=K, name=name)


def rbf_kernel(X, two_sigma_sq: float) -> np.ndarray:
    X = np.asarray(X, dtype=float).reshape(len(X), -1)
    K = np.exp(-squareform(pdist(X, "sqeuclidean")) / two_sigma_sq)
    np.fill_diagonal(K, 1.0)
    return K


def matern_kernel(X, nu: float, theta: float = 1.0) -> np.ndarray:
    """Matérn covariance in closed form for ``nu`` in ``{1/2, 3/2, 5/2}``."""
    if nu not in MATERN_NUS:
        raise ValidationError(f"nu={nu} unsupported; choose one of {MATERN_NUS}")
    if theta <= 0:
        raise ValidationError(f"theta must be positive, got {theta}")
    X = np.asarray(X, dtype=float).reshape(len(X), -1)
    r = squareform(pdist(X, "euclidean")) / theta
    if nu == 0.5:
        K = np.exp(-r)
    elif nu == 1.5:
        s = np.sqrt(3.0) * r
        K = (1.0 + s) * np.exp(-s)
    else:
        s = np.sqrt(5.0) * r
        K = (1.0 + s + s * s / 3.0) * np.exp(-s)
    np.fill_diagonal(K, 1.0)
    return K


def gen_rbf(
    n: int, two_sigma_sq: float = 1e-4, mu: float = 1e-2, seed: int = 0, d: int = 1
) -> SpsdOperator:
    """RBF kernel ``exp(-|x_i - x_j|^2 / (2 sigma^2))`` on ``x_i ~ N(0, I_d)``."""
    return _kernel_operator(rbf_kernel(_points(n, d, seed), two_sigma_sq), mu, f"rbf(n={n},d={d})")


def gen_matern(
    n: int, nu: float = 0.5, theta: float = 1.0, mu: float = 1e-2, seed: int = 0, d: int = 1
) -> SpsdOperator:
    """Matérn kernel on ``x_i ~ N(0, I_d)``."""
    K = matern_kernel(_points(n, d, seed), nu, theta)
    return _kernel_operator(K, mu, f"matern(n={n},nu={nu},d={d})")


@dataclass(frozen=True)
class MatrixSpec:
    """Serializable description of a test operator."""

    family: str
    n: int
    mu: Optional[float] = None
    seed: int = 0
    d: int = 1
    nu: float = 0.5
    theta: float = 1.0
    two_sigma_sq: float = 1e-4
    density: float = 1e-2
    k_terms: Optional[int] = None
    c: float = 10.0
    rotation_seed: Optional[int] = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValidationError(f"unknown family {self.family!r}; choose one of {FAMILIES}")
        if self.n < 1:
            raise ValidationError(f"n must be positive, got {self.n}")
        if self.mu is not None and self.mu <= 0:
            raise ValidationError(f"mu must be positive, got {self.mu}")
        if ALIASES.get(self.family, self.family) == "matern" and self.nu not in MATERN_NUS:
            raise ValidationError(f"nu={self.nu} unsupported; choose one of {MATERN_NUS}")

    @classmethod
    def from_dict(cls, d: dict) -> "MatrixSpec":
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValidationError(f"unknown matrix fields: {sorted(unknown)}")
        return cls(**d)

    @property
    def effective_mu(self) -> float:
        return DEFAULT_MU[self.family] if self.mu is None else self.mu

    def to_dict(self) -> dict:
        return asdict(self)

    def key(self) -> str:
        """Stable hash identifying the generated matrix."""
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]

    @property
    def matrix_id(self) -> str:
        return f"{self.family}-n{self.n}-{self.key()[:8]}"

    def build(self) -> SpsdOperator:
        mu = self.effective_mu
        family = ALIASES.get(self.family, self.family)
        if family == "alg":
            return gen_algebraic(self.n, mu, self.rotation_seed)
        if family == "geom":
            return gen_geometric(self.n, mu, self.rotation_seed)
        if family == "flat":
            return gen_flat(self.n, self.c)
        if family == "gaps":
            return gen_gaps(self.n, self.k_terms, self.density, mu, self.seed)
        if family == "rbf":
            return gen_rbf(self.n, self.two_sigma_sq, mu, self.seed, self.d)
        return gen_matern(self.n, self.nu, self.theta, mu, self.seed, self.d)
