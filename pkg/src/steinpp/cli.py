"""Command-line front end: single-shot estimation and the full studies.

Exit codes: 0 success, 1 validation/usage error, 2 runtime failure.  Data goes
to --out (or standard output); diagnostics go to standard error.  Every
seeded subcommand is byte-reproducible; when writing to a file, a
``<out>.meta.json`` sidecar records the seed and settings used.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import __version__
from . import experiments as xp
from .estimators import mle, stein_estimate
from .gain import expected_gain, datadriven_objective
from .optimize import optimize_at_theta, optimize_datadriven
from .phi import ExponentialPhi
from .pointprocess import BallWindow, PointPattern, SteinParams, rescale_to_unit
from .selftest import run_selftest


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="master seed (default 0)")
    common.add_argument("--samples", type=int, default=None, help="Monte-Carlo samples per expectation")
    common.add_argument("--reps", type=int, default=None, help="replications per cell")
    common.add_argument("--out", type=str, default=None, help="output file (default: stdout)")
    common.add_argument("--threads", type=int, default=1, help="worker threads; 0 = all cores")
    common.add_argument("--d", type=int, default=2, help="dimension of the ball window")
    common.add_argument("--theta", type=float, default=None, help="intensity (or its estimate)")
    common.add_argument("--k", type=int, default=None, help="order of the nearest point used")
    common.add_argument("--gamma", type=float, default=None, help="shaping parameter gamma")
    common.add_argument("--kappa", type=float, default=None, help="shaping parameter kappa")
    common.add_argument("--rho", type=float, default=None, help="confidence-interval width factor")

    parser = argparse.ArgumentParser(
        prog="steinpp",
        description="Shrinkage estimation of Poisson intensities on balls",
    )
    parser.add_argument("--version", action="version", version=f"steinpp {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("estimate", parents=[common], help="estimate intensity from a pattern file")
    p.add_argument("--file", required=True, help="CSV of points, one per line, d columns, no header")
    p.add_argument("--radius", type=float, default=1.0, help="window radius (default 1)")

    sub.add_parser("gain", parents=[common], help="expected gain at given (k, gamma, kappa)")
    sub.add_parser("optimize", parents=[common], help="search (k, gamma, kappa); --rho for data-driven")
    sub.add_parser("table1", parents=[common], help="known-theta study over the (theta, d) grid")
    sub.add_parser("table2", parents=[common], help="data-driven study over rho values")
    sub.add_parser("gain-curve", parents=[common], help="gain versus theta for fixed k")
    sub.add_parser("pr-curve", parents=[common], help="first-point comparator gains")
    sub.add_parser("selftest", parents=[common], help="distributional and identity checks")
    return parser


def _require(args, *names):
    missing = [n for n in names if getattr(args, n) is None]
    if missing:
        flags = ", ".join("--" + n for n in missing)
        raise ValueError(f"missing required flags: {flags}")


def _write_output(text: str, args, meta: dict) -> None:
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        with open(args.out + ".meta.json", "w", encoding="utf-8") as fh:
            json.dump(meta, fh, indent=2, sort_keys=True)
            fh.write("\n")
    else:
        sys.stdout.write(text)
        print(f"# {json.dumps(meta, sort_keys=True)}", file=sys.stderr)


def _meta(args, **extra) -> dict:
    meta = {"seed": args.seed, "version": __version__}
    meta.update(extra)
    return meta


def _config(args, **overrides) -> xp.ExperimentConfig:
    kwargs = dict(seed=args.seed, threads=args.threads)
    if args.reps is not None:
        kwargs["replications"] = args.reps
        kwargs["table2_replications"] = args.reps
    if args.samples is not None:
        kwargs["samples"] = args.samples
        kwargs["table2_samples"] = args.samples
    kwargs.update(overrides)
    return xp.ExperimentConfig(**kwargs)


def _cmd_estimate(args) -> None:
    _require(args, "k", "gamma", "kappa")
    pts = np.loadtxt(args.file, delimiter=",", ndmin=2) if _nonempty(args.file) else np.empty((0, args.d))
    window = BallWindow(args.d, args.radius)
    pattern = PointPattern(window, pts)
    est_mle = mle(pattern)
    params = SteinParams(args.k, args.gamma, args.kappa)
    if window.is_unit:
        est_stein = stein_estimate(pattern, params)
    else:
        unit_pattern, scale = rescale_to_unit(pattern)
        est_stein = stein_estimate(unit_pattern, params) / scale
    _write_output(f"mle {est_mle:.17g}\nstein {est_stein:.17g}\n", args, _meta(args, file=args.file))


def _nonempty(path) -> bool:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return any(line.strip() for line in fh)
    except FileNotFoundError:
        raise ValueError(f"pattern file not found: {path}")


def _cmd_gain(args) -> None:
    _require(args, "theta", "k", "gamma", "kappa")
    window = BallWindow(args.d)
    family = ExponentialPhi(args.gamma, args.kappa)
    n = args.samples or 500_000
    rng = np.random.default_rng(args.seed)
    if args.rho is not None and args.rho > 0:
        est = datadriven_objective(args.k, family, args.theta, args.rho, window, n, rng)
        label = "interval_objective"
    else:
        est = expected_gain(args.k, family, args.theta, window, n, rng)
        label = "gain"
    _write_output(
        f"{label} {est.value:.17g}\nstd_error {est.std_error:.17g}\nn_samples {est.n_samples}\n",
        args,
        _meta(args, theta=args.theta, d=args.d, k=args.k),
    )


def _cmd_optimize(args) -> None:
    _require(args, "theta")
    window = BallWindow(args.d)
    n = args.samples or 50_000
    rng = np.random.default_rng(args.seed)
    threads = args.threads if args.threads != 0 else None
    workers = threads if threads else (__import__("os").cpu_count() or 1)
    if args.rho is not None:
        result = optimize_datadriven(
            args.theta, args.rho, window, n_samples=n, rng=rng, threads=workers
        )
    else:
        result = optimize_at_theta(
            args.theta, window, n_samples=n, rng=rng, n_confirm=10 * n, threads=workers
        )
    p, o = result.params, result.objective
    _write_output(
        (
            f"k_star {p.k}\ngamma_star {p.gamma:.17g}\nkappa_star {p.kappa:.17g}\n"
            f"objective {o.value:.17g}\nstd_error {o.std_error:.17g}\n"
            f"evaluations {result.evaluations}\nk_range {result.k_range[0]}..{result.k_range[1]}\n"
        ),
        args,
        _meta(args, theta=args.theta, d=args.d, rho=args.rho),
    )


def _cmd_table1(args) -> None:
    config = _config(args)
    rows = xp.table1_study(config)
    _write_output(
        xp.rows_to_csv(rows, xp.TABLE1_COLUMNS), args, _meta(args, study="table1")
    )


def _cmd_table2(args) -> None:
    config = _config(args)
    rows = xp.table2_study(config)
    _write_output(
        xp.rows_to_csv(rows, xp.TABLE2_COLUMNS), args, _meta(args, study="table2")
    )


def _cmd_gain_curve(args) -> None:
    config = _config(args)
    rows = xp.gain_curve_study(config)
    _write_output(
        xp.rows_to_csv(rows, xp.GAIN_CURVE_COLUMNS), args, _meta(args, study="gain-curve")
    )


def _cmd_pr_curve(args) -> None:
    config = _config(args)
    rows = xp.pr_study(config)
    _write_output(xp.rows_to_csv(rows, xp.PR_COLUMNS), args, _meta(args, study="pr-curve"))


def _cmd_selftest(args) -> None:
    failures = run_selftest(seed=args.seed, n_ks=args.samples or 10_000)
    if failures:
        raise RuntimeError(f"{failures} selftest check(s) failed")


_COMMANDS = {
    "estimate": _cmd_estimate,
    "gain": _cmd_gain,
    "optimize": _cmd_optimize,
    "table1": _cmd_table1,
    "table2": _cmd_table2,
    "gain-curve": _cmd_gain_curve,
    "pr-curve": _cmd_pr_curve,
    "selftest": _cmd_selftest,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 1
    try:
        _COMMANDS[args.command](args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # runtime failure
        print(f"runtime failure: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
