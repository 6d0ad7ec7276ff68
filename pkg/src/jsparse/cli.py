"""Command-line front end: ``jsparse {sdim,sweep,solve,oracle}``.

Exit codes: 0 success, 2 configuration/input error, 3 numerical failure,
4 I/O error, 5 solver did not converge.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import report
from .experiments import (ConfigError, ExperimentConfig, gen_joint_sparse, gen_prior,
                          run_sweep, theory_overlay, _splitmix64, _stream_seed,
                          _SIGNAL, _PRIOR)
from .geometry import PriorGeometry, mc_sdim_estimate
from .linesearch import BracketError
from .sdim import kinematic_thresholds, sdim_bounds
from .solver import RankDeficientError, SolverConfig, solve_ml1p
from .specfun import QuadratureError

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_IO, EXIT_NONCONVERGED = 0, 2, 3, 4, 5
NUMERIC_ERRORS = (QuadratureError, BracketError, RankDeficientError, FloatingPointError,
                  np.linalg.LinAlgError)
LOG_LEVELS = {"error": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}

log = logging.getLogger("jsparse")


def load_config(path):
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    return ExperimentConfig.from_dict(data)


def dump_config(config):
    return json.dumps(config.to_dict(), indent=2, sort_keys=True) + "\n"


def _ensure_dir(path):
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _print_theory(rows):
    for name, value in rows:
        print(f"{name:>16} {value if isinstance(value, str) else report.fmt(value)}")


def cmd_sdim(args):
    config = load_config(args.config)
    geom, bounds, thresholds = theory_overlay(config)
    rows = report.theory_rows(config, geom, bounds, thresholds)
    _print_theory(rows)
    out = _ensure_dir(args.out)
    report.write_text(out / "theory.csv", report.theory_csv(rows))
    return EXIT_OK


def cmd_sweep(args):
    config = load_config(args.config)
    out = _ensure_dir(args.out)
    result = run_sweep(config, parallelism=args.parallelism)
    rows = report.theory_rows(config, result.geometry, result.theory, result.thresholds)
    report.write_text(out / "rates.csv", report.rates_csv(result))
    report.write_text(out / "trials.csv", report.trials_csv(result))
    report.write_text(out / "theory.csv", report.theory_csv(rows))
    if args.svg:
        report.write_text(out / "plot.svg", report.sweep_svg(result))
    print(f"crossing_m {result.crossing()}")
    _print_theory(rows)
    return EXIT_OK


def cmd_solve(args):
    try:
        a = report.read_matrix(args.a)
        y = report.read_matrix(args.y)
        w = report.read_matrix(args.w) if args.w else np.zeros((a.shape[1], y.shape[1]))
    except report.MatrixFormatError as exc:
        raise ConfigError(str(exc)) from None
    if y.shape[0] != a.shape[0] or w.shape != (a.shape[1], y.shape[1]):
        raise ConfigError(f"dimension mismatch: A {a.shape}, Y {y.shape}, W {w.shape}")
    if a.shape[0] > a.shape[1]:
        raise ConfigError(f"A must have m <= n, got {a.shape}")
    if args.lam < 0:
        raise ConfigError("lambda must be nonnegative")
    result = solve_ml1p(a, y, w, SolverConfig(lam=args.lam))
    report.write_text(args.out, report.matrix_csv(result.x_hat))
    print(f"objective {report.fmt(result.objective)}")
    print(f"primal_residual {report.fmt(result.primal_residual)}")
    print(f"dual_residual {report.fmt(result.dual_residual)}")
    print(f"iterations {result.iterations}")
    print(f"converged {report.fmt(result.converged)}")
    return EXIT_OK if result.converged else EXIT_NONCONVERGED


def oracle_pair(config):
    """The seeded reference ``(X0, W)`` used by the ``oracle`` subcommand."""
    seed = _splitmix64(config.master_seed ^ 0x6F7261636C65)  # "oracle"
    ens = gen_joint_sparse(config.n, config.l, config.k, _stream_seed(seed, _SIGNAL))
    prior = gen_prior(ens, config.prior_type, config.k_w, config.wrong_supports,
                      _stream_seed(seed, _PRIOR))
    return ens.x0, prior.w


def cmd_oracle(args):
    config = load_config(args.config)
    if args.samples < 1:
        raise ConfigError("--samples must be >= 1")
    x0, w = oracle_pair(config)
    estimate, se = mc_sdim_estimate(x0, w, config.lam, args.samples, args.seed)
    geom = PriorGeometry.from_signals(x0, w, config.lam)
    bounds = sdim_bounds(geom, config.n, config.k)
    thresholds = kinematic_thresholds(bounds.psi_p, config.n, config.l)
    print(f"estimate {report.fmt(estimate)}")
    print(f"std_error {report.fmt(se)}")
    print(f"psi_p {report.fmt(bounds.psi_p)}")
    print(f"lower {report.fmt(bounds.lower)}")
    print(f"valid_lower {report.fmt(bounds.valid_lower)}")
    print(f"m_success {report.fmt(thresholds.m_success)}")
    print(f"m_failure {report.fmt(thresholds.m_failure)}")
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(prog="jsparse", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sdim", help="statistical-dimension bounds and thresholds")
    p.add_argument("--config", required=True)
    p.add_argument("--out", default="out")
    p.set_defaults(func=cmd_sdim)

    p = sub.add_parser("sweep", help="Monte-Carlo phase-transition sweep")
    p.add_argument("--config", required=True)
    p.add_argument("--out", default="out")
    p.add_argument("--parallelism", type=int, default=1, help="worker processes, 0 = auto")
    p.add_argument("--svg", action=argparse.BooleanOptionalAction, default=True)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("solve", help="solve one instance from CSV matrices")
    p.add_argument("--a", required=True)
    p.add_argument("--y", required=True)
    p.add_argument("--w")
    p.add_argument("--lambda", dest="lam", type=float, default=0.5)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("oracle", help="Monte-Carlo statistical-dimension estimate")
    p.add_argument("--config", required=True)
    p.add_argument("--samples", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_oracle)
    return parser


def _setup_logging():
    name = os.environ.get("JSPARSE_LOG", "error").lower()
    level = LOG_LEVELS.get(name)
    logging.basicConfig(level=level or logging.ERROR, stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    if level is None:
        log.error("ignoring JSPARSE_LOG=%r (expected error, info or debug)", name)


def main(argv=None):
    _setup_logging()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse uses 2 for usage errors, which is our config code as well
        return int(exc.code or 0)
    if getattr(args, "parallelism", 0) < 0:
        print("error: --parallelism must be >= 0", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NUMERIC_ERRORS as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
