"""Seeded multi-trial experiments with CSV output.

A run evaluates every ``(strategy, ell, trial)`` combination on one test
matrix, compares with the exact value and writes three files next to
``output_path``: the per-trial records, a per-``(strategy, ell)`` summary
(``*.summary.csv``) and, optionally, the matching error bounds
(``*.bounds.csv``).  Exact values and spectra are cached as JSON
(``oracle-<hash>.json``) keyed by the matrix description.
"""

from __future__ import annotations

import csv
import hashlib
import json
import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Optional

import numpy as np

from .bounds import TailSpectrum, ideal_alpha_rank_var, optimize_split
from .estimators import floor_rank, run_strategy
from .operator import DENSE_LIMIT, trace_log_exact
from .testmat import MatrixSpec

log = logging.getLogger(__name__)

STRATEGIES = ("one_sample", "logdetective", "lowrank", "alpha_rank", "half_samples", "plain_slq")
ANALYTIC_FAMILIES = ("alg", "geom", "flat")


class ConfigError(ValueError):
    """Invalid experiment configuration."""


class OracleSizeError(ConfigError):
    """The dense oracle would exceed the supported matrix size."""


@dataclass(frozen=True)
class StrategySpec:
    name: str
    ells: tuple
    m: int = 10
    beta: Optional[float] = None
    alpha: Optional[float] = None
    label: Optional[str] = None

    def __post_init__(self):
        if self.name not in STRATEGIES:
            raise ConfigError(f"unknown strategy {self.name!r}; choose from {STRATEGIES}")
        ells = tuple(int(e) for e in self.ells)
        if not ells or any(b <= a for a, b in zip(ells, ells[1:])):
            raise ConfigError(f"ell grid of {self.name!r} must be non-empty and strictly increasing")
        if ells[0] < 1 or self.m < 1:
            raise ConfigError("ell and m must be positive")
        object.__setattr__(self, "ells", ells)
        if self.name == "alpha_rank" and self.alpha is None:
            raise ConfigError("alpha_rank needs an 'alpha' parameter")
        if self.name == "logdetective" and self.beta is None:
            object.__setattr__(self, "beta", 0.75)
        if self.label is None:
            label = self.name
            if self.name == "alpha_rank":
                label = f"alpha_rank[{self.alpha:g}]"
            elif self.name == "logdetective":
                label = f"logdetective[{self.beta:g}]"
            object.__setattr__(self, "label", label)

    def params(self) -> dict:
        return {"alpha": self.alpha, "beta": self.beta}


@dataclass(frozen=True)
class ExperimentConfig:
    matrix: MatrixSpec
    strategies: tuple
    trials: int = 100
    base_seed: int = 0
    output_path: Optional[str] = None
    emit_bounds: bool = False
    threads: int = 1
    cache_dir: Optional[str] = None
    bound_totals: Optional[tuple] = None
    bound_m: int = 10

    def __post_init__(self):
        if self.trials < 1:
            raise ConfigError(f"trials must be >= 1, got {self.trials}")
        if self.threads < 1:
            raise ConfigError(f"threads must be >= 1, got {self.threads}")

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        d = dict(d)
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config fields: {sorted(unknown)}")
        try:
            d["matrix"] = MatrixSpec.from_dict(d["matrix"])
            d["strategies"] = tuple(StrategySpec(**s) for s in d.get("strategies", ()))
        except KeyError as exc:
            raise ConfigError(f"missing config field {exc}") from None
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from None
        if d.get("bound_totals") is not None:
            d["bound_totals"] = tuple(int(t) for t in d["bound_totals"])
        return cls(**d)


def load_config(path) -> ExperimentConfig:
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return ExperimentConfig.from_dict(raw)


@dataclass
class ExperimentRecord:
    matrix_id: str
    n: int
    strategy: str
    ell: int
    m: int
    beta: Optional[float]
    alpha: Optional[float]
    seed: int
    trial: int
    estimate: float
    exact: float
    abs_error: float
    rel_error: float
    normalized: int
    matvecs_used: int
    branch: str


@dataclass
class SummaryRow:
    strategy: str
    ell: int
    m: int
    trials: int
    mean_rel_error: float
    trimmed_std: float
    branch_fraction: float


@dataclass
class BoundRecord:
    matrix_id: str
    strategy: str
    ell: int
    m: int
    total: int
    kind: str
    k: Optional[int]
    p: Optional[int]
    bound: float
    normalized_bound: float
    normalized: int


@dataclass
class Oracle:
    exact: float
    eigenvalues: np.ndarray = field(repr=False)


def trial_seed(base_seed: int, strategy: str, ell: int, trial: int) -> int:
    """Stable 64-bit seed for one trial, independent of execution order."""
    blob = f"{base_seed}|{strategy}|{ell}|{trial}".encode()
    return int.from_bytes(hashlib.blake2b(blob, digest_size=8).digest(), "little")


def compute_oracle(matrix: MatrixSpec, cache_dir=None) -> Oracle:
    """Exact ``trace log(A + I)`` and spectrum, cached on disk when possible."""
    path = None
    if cache_dir is not None:
        path = Path(cache_dir) / f"oracle-{matrix.key()}.json"
        if path.exists():
            data = json.loads(path.read_text())
            return Oracle(data["exact"], np.array(data["eigenvalues"]))
    if matrix.family not in ANALYTIC_FAMILIES and matrix.n > DENSE_LIMIT:
        raise OracleSizeError(
            f"dense oracle refused for n={matrix.n} > {DENSE_LIMIT}; reduce n in the config"
        )
    op = matrix.build()
    eigs = op.spectrum()
    oracle = Oracle(trace_log_exact(eigs), eigs)
    if path is not None:
        path.parent.mkdir(parents=True, exist_ok=True)
        payload = {
            "matrix": matrix.to_dict(),
            "exact": oracle.exact,
            "eigenvalues": [float(x) for x in eigs],
        }
        path.write_text(json.dumps(payload))
    return oracle


def _relative(value: float, exact: float):
    if exact != 0.0:
        return value / abs(exact), 1
    return value, 0


def trimmed_std(values, fraction: float = 0.1) -> float:
    """Sample standard deviation after dropping the best and worst ``fraction``."""
    v = np.sort(np.asarray(values, dtype=float))
    cut = int(math.floor(fraction * v.size))
    v = v[cut : v.size - cut]
    if v.size < 2:
        return 0.0
    return float(np.std(v, ddof=1))


def summarize(records) -> list:
    groups = {}
    for r in records:
        groups.setdefault((r.strategy, r.ell), []).append(r)
    rows = []
    for (strategy, ell), recs in sorted(groups.items()):
        errs = [r.rel_error for r in recs]
        rows.append(
            SummaryRow(
                strategy,
                ell,
                recs[0].m,
                len(recs),
                float(np.mean(errs)),
                trimmed_std(errs),
                sum(r.branch == "one_sample" for r in recs) / len(recs),
            )
        )
    return rows


def strategy_bound(spec: TailSpectrum, strategy: StrategySpec, ell: int, exact: float, matrix_id=""):
    """Best theoretical error scale matching one ``(strategy, ell)`` cell."""
    m = strategy.m
    k = p = None
    if strategy.name in ("one_sample", "logdetective"):
        kind = "one_sample"
        if ell < 4:
            return None
        k, p, b = optimize_split(spec, ell, "one_sample")
        value = math.sqrt(b)
    elif strategy.name == "lowrank":
        kind = "lowrank"
        k, p, value = optimize_split(spec, ell + m, "lowrank")
    elif strategy.name in ("alpha_rank", "half_samples"):
        kind = "alpha_rank"
        r = (ell + m) // 2 if strategy.name == "half_samples" else floor_rank(strategy.alpha, ell)
        if r < 4:
            return None
        k, p, b = optimize_split(spec, r, "one_sample")
        value = math.sqrt(m / (ell + m - r) * b)
    else:
        kind = "slq_ideal"
        value = math.sqrt(ideal_alpha_rank_var(spec, ell, m, 0.0))
    normalized, flag = _relative(value, exact)
    return BoundRecord(matrix_id, strategy.label, ell, m, ell + m, kind, k, p, value, normalized, flag)


def _run_trial(op, matrix_id, n, strategy, ell, trial, base_seed, exact):
    seed = trial_seed(base_seed, strategy.label, ell, trial)
    view = op.view()
    res = run_strategy(view, strategy.name, ell, strategy.m, seed, **strategy.params())
    if res.matvecs_used != view.matvecs:
        raise RuntimeError(f"{strategy.label}: reported {res.matvecs_used} matvecs, counted {view.matvecs}")
    abs_err = abs(res.value - exact)
    rel, flag = _relative(abs_err, exact)
    return ExperimentRecord(
        matrix_id, n, strategy.label, ell, strategy.m, strategy.beta, strategy.alpha,
        seed, trial, res.value, exact, abs_err, rel, flag, view.matvecs, res.branch,
    )


def run_experiment(config: ExperimentConfig, out: Optional[str] = None, threads: Optional[int] = None):
    """Run every trial of ``config``; returns ``(records, summary, bounds)``.

    Files are written when ``out`` or ``config.output_path`` is set.
    """
    matrix = config.matrix
    out = out if out is not None else config.output_path
    cache_dir = config.cache_dir
    if cache_dir is None and out is not None:
        cache_dir = str(Path(out).resolve().parent)
    oracle = compute_oracle(matrix, cache_dir)
    op = matrix.build()
    jobs = [
        (s, ell, t) for s in config.strategies for ell in s.ells for t in range(config.trials)
    ]
    log.info("running %d trials on %s", len(jobs), matrix.matrix_id)

    def work(job):
        s, ell, t = job
        return _run_trial(op, matrix.matrix_id, matrix.n, s, ell, t, config.base_seed, oracle.exact)

    nthreads = threads or config.threads
    if nthreads > 1:
        with ThreadPoolExecutor(nthreads) as pool:
            records = list(pool.map(work, jobs))
    else:
        records = [work(j) for j in jobs]
    records.sort(key=lambda r: (r.strategy, r.ell, r.trial))
    summary = summarize(records)

    bounds = []
    if config.emit_bounds:
        spec = TailSpectrum(oracle.eigenvalues)
        for s in config.strategies:
            for ell in s.ells:
                row = strategy_bound(spec, s, ell, oracle.exact, matrix.matrix_id)
                if row is not None:
                    bounds.append(row)

    if out is not None:
        write_csv(out, records, ExperimentRecord)
        write_csv(_sibling(out, "summary"), summary, SummaryRow)
        if config.emit_bounds:
            write_csv(_sibling(out, "bounds"), bounds, BoundRecord)
    return records, summary, bounds


def run_bound_sweep(matrix: MatrixSpec, total_grid, m: int, cache_dir=None) -> list:
    """Optimized one-sample and low-rank bounds over a grid of total budgets.

    For total budget ``t`` the one-sample bound uses ``k + p = t - m`` and
    is reported as a square root (an error scale); the low-rank bound uses
    ``k + p = t``.  Both are divided by ``trace log(A + I)`` unless it is 0.
    """
    oracle = compute_oracle(matrix, cache_dir)
    spec = TailSpectrum(oracle.eigenvalues)
    rows = []
    for total in total_grid:
        ell = total - m
        if ell >= 4:
            k, p, b = optimize_split(spec, ell, "one_sample")
            val = math.sqrt(b)
            norm, flag = _relative(val, oracle.exact)
            rows.append(BoundRecord(matrix.matrix_id, "one_sample", ell, m, total, "one_sample", k, p, val, norm, flag))
        k, p, val = optimize_split(spec, total, "lowrank")
        norm, flag = _relative(val, oracle.exact)
        rows.append(BoundRecord(matrix.matrix_id, "lowrank", ell, m, total, "lowrank", k, p, val, norm, flag))
    return rows


def _sibling(path, tag):
    p = Path(path)
    return str(p.with_name(f"{p.stem}.{tag}{p.suffix or '.csv'}"))


def _fmt(x):
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return f"{float(x):.16e}"
    return str(x)


def write_csv(path, rows, row_type) -> None:
    """Write dataclass rows with a header; floats carry 17 significant digits."""
    path = os.fspath(path)
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    header = [f.name for f in fields(row_type)]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_fmt(getattr(r, h)) for h in header])
