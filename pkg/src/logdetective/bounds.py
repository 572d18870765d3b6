"""Closed-form error and variance expressions evaluated on a known spectrum.

All functions take a :class:`TailSpectrum`, which caches suffix sums so
that every expression costs O(1) after an O(n) setup.  Ranks and ``k``
count leading eigenvalues: the tail after ``k`` is ``lambda_{k+1}, ...``.
"""

from __future__ import annotations

import math

import numpy as np

from .operator import ValidationError

E2 = math.e**2


def _suffix_sums(x: np.ndarray) -> np.ndarray:
    """Kahan-compensated sums ``out[k] = sum(x[k:])``, ``out[n] = 0``."""
    out = np.zeros(x.size + 1)
    s = c = 0.0
    for i in range(x.size - 1, -1, -1):
        y = float(x[i]) - c
        t = s + y
        c = (t - s) - y
        s = t
        out[i] = s
    return out


class TailSpectrum:
    """Spectrum of ``A`` with cached tail sums.

    Attributes ``nuclear``, ``frob2``, ``log1p`` and ``log1p2`` hold the
    suffix sums of ``lambda``, ``lambda**2``, ``log(1+lambda)`` and
    ``log(1+lambda)**2``.
    """

    def __init__(self, eigenvalues):
        lam = np.sort(np.asarray(eigenvalues, dtype=float))[::-1]
        if lam.size and lam[-1] < -1e-12:
            raise ValidationError("spectrum has a negative eigenvalue")
        self.eigenvalues = np.maximum(lam, 0.0)
        self.n = lam.size
        lg = np.log1p(self.eigenvalues)
        self.nuclear = _suffix_sums(self.eigenvalues)
        self.frob2 = _suffix_sums(self.eigenvalues**2)
        self.log1p = _suffix_sums(lg)
        self.log1p2 = _suffix_sums(lg**2)

    def _idx(self, k: int) -> int:
        if k < 0:
            raise ValidationError(f"index must be non-negative, got {k}")
        return min(int(k), self.n)

    def tail_norm2(self, k: int) -> float:
        """Largest eigenvalue after the first ``k`` (zero past the end)."""
        k = self._idx(k)
        return float(self.eigenvalues[k]) if k < self.n else 0.0

    def trace_log(self) -> float:
        return float(self.log1p[0])


def ideal_one_sample_var(spec: TailSpectrum, ell: int) -> float:
    """Variance of one probe after deflating the top ``ell`` eigenvalues exactly."""
    return 2.0 * spec.log1p2[spec._idx(ell)]


def ideal_lowrank_err(spec: TailSpectrum, rank: int) -> float:
    """Error of truncating to the best rank-``rank`` approximation."""
    return float(spec.log1p[spec._idx(rank)])


def ideal_alpha_rank_var(spec: TailSpectrum, ell: int, m: int, alpha: float) -> float:
    """Variance of the mixed estimator with exact deflation of rank ``floor(alpha*ell)``."""
    r = int(math.floor(alpha * ell + 1e-9))
    return 2.0 * m / ((1.0 - alpha) * ell + m) * spec.log1p2[spec._idx(r)]


def _check_split(k: int, p: int):
    if k < 0:
        raise ValidationError(f"k must be >= 0, got {k}")
    if p < 2:
        raise ValidationError(f"oversampling p must be >= 2, got {p}")


def bound_one_sample(spec: TailSpectrum, k: int, p: int) -> float:
    """Upper bound on the squared expected error of the one-sample estimator.

    Valid for a rank ``k + p`` Nyström preconditioner, ``p >= 2`` and
    ``k + p >= 4``::

        2 (1 + k/(p-1)) log(1 + 2e^2 (k+p)/(p^2-1) ||tail||_* + (1 + 2k/(p-1)) ||tail||_2)
          * ||log(tail + I)||_*
    """
    _check_split(k, p)
    if k + p < 4:
        raise ValidationError(f"k + p must be >= 4, got {k + p}")
    i = spec._idx(k)
    log_nuc = spec.log1p[i]
    if log_nuc == 0.0:
        return 0.0
    spectral = (
        1.0
        + 2.0 * E2 * (k + p) / (p * p - 1.0) * spec.nuclear[i]
        + (1.0 + 2.0 * k / (p - 1.0)) * spec.tail_norm2(k)
    )
    return 2.0 * (1.0 + k / (p - 1.0)) * math.log(spectral) * log_nuc


def bound_alpha_rank(spec: TailSpectrum, ell: int, m: int, alpha: float, k: int, p: int) -> float:
    """One-sample bound at rank ``floor(alpha*ell) = k + p`` scaled by ``m / ((1-alpha) ell + m)``."""
    r = int(math.floor(alpha * ell + 1e-9))
    if k + p != r:
        raise ValidationError(f"k + p = {k + p} must equal floor(alpha*ell) = {r}")
    return m / ((1.0 - alpha) * ell + m) * bound_one_sample(spec, k, p)


def bound_lowrank(spec: TailSpectrum, k: int, p: int) -> float:
    """Bound on the expected low-rank error: ``(1 + k/(p-1)) ||log(tail + I)||_*``."""
    _check_split(k, p)
    return (1.0 + k / (p - 1.0)) * spec.log1p[spec._idx(k)]


def optimize_split(spec: TailSpectrum, total: int, which: str = "one_sample"):
    """Minimize a bound over all splits ``k + p = total`` with ``p >= 2``.

    Returns ``(k, p, value)``; ties go to the smaller ``k``.
    """
    if which == "one_sample":
        if total < 4:
            raise ValidationError(f"total must be >= 4, got {total}")
        fn = bound_one_sample
    elif which == "lowrank":
        if total < 2:
            raise ValidationError(f"total must be >= 2, got {total}")
        fn = bound_lowrank
    else:
        raise ValidationError(f"unknown bound {which!r}; use 'one_sample' or 'lowrank'")
    best = None
    for k in range(0, total - 1):
        v = fn(spec, k, total - k)
        if best is None or v < best[2]:
            best = (k, total - k, v)
    return best
