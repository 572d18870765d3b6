"""Command line entry point: ``logdetective {run,bounds,exact} --config FILE``.

Exit codes: 0 success, 2 configuration error, 3 numerical-domain error.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys

import numpy as np

from . import experiment as ex
from .operator import NumericalDomainError

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="logdetective", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run all trials and write CSV records and summary")
    run.add_argument("--config", required=True)
    run.add_argument("--out", help="records CSV (defaults to output_path in the config)")
    run.add_argument("--threads", type=int, default=None)

    bounds = sub.add_parser("bounds", help="write optimized error bounds over a budget grid")
    bounds.add_argument("--config", required=True)
    bounds.add_argument("--out", help="bounds CSV (defaults to <output_path>.bounds.csv)")

    exact = sub.add_parser("exact", help="print the exact log-determinant")
    exact.add_argument("--config", required=True)
    return p


def _bound_totals(cfg: ex.ExperimentConfig):
    if cfg.bound_totals is not None:
        return list(cfg.bound_totals), cfg.bound_m
    if not cfg.strategies:
        raise ex.ConfigError("bounds need 'bound_totals' or at least one strategy")
    s = cfg.strategies[0]
    return [ell + s.m for ell in s.ells], s.m


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    try:
        cfg = ex.load_config(args.config)
        if args.command == "run":
            out = args.out or cfg.output_path
            if out is None:
                raise ex.ConfigError("no output path: pass --out or set output_path")
            if not cfg.strategies:
                raise ex.ConfigError("config lists no strategies")
            _, summary, _ = ex.run_experiment(cfg, out=out, threads=args.threads)
            for row in summary:
                print(
                    f"{row.strategy:>22s} ell={row.ell:<5d} mean_rel_error={row.mean_rel_error:.3e} "
                    f"trimmed_std={row.trimmed_std:.3e} one_sample={row.branch_fraction:.2f}"
                )
        elif args.command == "bounds":
            totals, m = _bound_totals(cfg)
            out = args.out or (ex._sibling(cfg.output_path, "bounds") if cfg.output_path else None)
            if out is None:
                raise ex.ConfigError("no output path: pass --out or set output_path")
            rows = ex.run_bound_sweep(cfg.matrix, totals, m, cfg.cache_dir)
            ex.write_csv(out, rows, ex.BoundRecord)
            print(f"wrote {len(rows)} bound rows to {out}")
        else:
            oracle = ex.compute_oracle(cfg.matrix, cfg.cache_dir)
            mu = cfg.matrix.effective_mu
            print(json.dumps({
                "matrix_id": cfg.matrix.matrix_id,
                "n": cfg.matrix.n,
                "trace_log_A_plus_I": oracle.exact,
                "logdet_H_plus_mu_I": oracle.exact + cfg.matrix.n * math.log(mu),
            }))
    except ex.ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalDomainError, np.linalg.LinAlgError) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return 1
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
