"""Command-line interface: simulate, fit, eval.

Exit codes: 0 success (warnings allowed), 1 usage or I/O error, 2
estimation failure (the report is still written, with an ``error``
field).
"""

from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path
from typing import List, Optional

from .errors import EstimationError, ValveFitError
from .estimator import PipelineConfig, fit_pipeline
from .evaluation import EvalConfig, run_eval
from .io import (dumps_report, error_report_dict, read_dataset_csv,
                 report_dict, write_dataset_csv, write_eval_csv,
                 write_plot_data_csv)
from .model import ValveParams, forward_flow
from .synth import TrajectoryConfig, generate, measure_snr

__all__ = ["main"]

_PROFILE_BY_FLAG = {"triangular": "triangular", "random": "random_walk_strokes"}


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with code 2 on bad flags; this CLI reserves 2 for
    # estimation failures, so route usage problems through exit code 1
    def error(self, message: str):
        raise _UsageError(message)


def _bool_flag(value: str) -> bool:
    lowered = value.strip().lower()
    if lowered in ("true", "false"):
        return lowered == "true"
    raise argparse.ArgumentTypeError(f"expected 'true' or 'false', got {value!r}")


def _range_flag(value: str) -> tuple:
    parts = value.split(",")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError("expected 'lo,hi'")
    try:
        return float(parts[0]), float(parts[1])
    except ValueError:
        raise argparse.ArgumentTypeError(f"non-numeric range {value!r}") from None


def _snr_grid_flag(value: str) -> tuple:
    out = []
    for part in value.split(","):
        part = part.strip()
        if not part:
            raise argparse.ArgumentTypeError("empty entry in SNR grid")
        if part.lower() in ("inf", "+inf", "infinity"):
            out.append(math.inf)
            continue
        try:
            out.append(float(part))
        except ValueError:
            raise argparse.ArgumentTypeError(
                f"SNR grid entry {part!r} is not a number") from None
    return tuple(out)


def _add_trajectory_flags(p: argparse.ArgumentParser, with_noise: bool) -> None:
    p.add_argument("--n", type=int, default=200, help="number of samples")
    p.add_argument("--alpha", type=float, default=2.0, help="flow gain")
    p.add_argument("--beta", type=float, default=-0.1,
                   help="up-stroke flow offset (signed)")
    if with_noise:
        p.add_argument("--noise-std", type=float, default=0.0,
                       help="flow noise standard deviation")
    p.add_argument("--profile", choices=sorted(_PROFILE_BY_FLAG), default="triangular",
                   help="stroke excitation profile")
    p.add_argument("--reversals", type=int, default=1,
                   help="stroke reversals (triangular profile)")
    p.add_argument("--reversal-prob", type=float, default=0.05,
                   help="per-step reversal probability (random profile)")
    p.add_argument("--range", type=_range_flag, default=(0.0, 1.0),
                   metavar="LO,HI", help="opening range inside [0,1]")
    p.add_argument("--shuffle", action="store_true",
                   help="permute samples (drops time ordering)")
    p.add_argument("--seed", type=int, default=0, help="PRNG seed")


def _trajectory_config(args, noise_std: float) -> TrajectoryConfig:
    return TrajectoryConfig(
        n_samples=args.n,
        params=ValveParams(args.alpha, args.beta),
        profile=_PROFILE_BY_FLAG[args.profile],
        opening_range=args.range,
        n_reversals=args.reversals,
        reversal_probability=args.reversal_prob,
        noise_std=noise_std,
        shuffle=args.shuffle,
        seed=args.seed,
    )


def _build_parser() -> _Parser:
    parser = _Parser(prog="valvefit",
                     description="Identify flow gain, hysteresis offset and "
                                 "stroke switching of a linear control valve.")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="generate a synthetic dataset CSV")
    _add_trajectory_flags(sim, with_noise=True)
    sim.add_argument("--out", required=True, help="output CSV path")

    fit = sub.add_parser("fit", help="fit a dataset CSV and write a JSON report")
    fit.add_argument("input", help="dataset CSV (header: index,opening,flow,mode)")
    fit.add_argument("--report", required=True, help="JSON report path")
    fit.add_argument("--plot-data", default=None,
                     help="per-sample CSV (opening, flow, fitted flow, label); "
                          "a PNG figure is rendered alongside it")
    fit.add_argument("--figure", default=None,
                     help="explicit figure path (default: next to --plot-data)")
    fit.add_argument("--no-figure", action="store_true",
                     help="suppress figure rendering")
    fit.add_argument("--time-ordered", type=_bool_flag, default=True,
                     metavar="{true,false}",
                     help="whether sample order is acquisition order (default true)")
    fit.add_argument("--tol", type=float, default=PipelineConfig.tol,
                     help="indicator refinement tolerance")
    fit.add_argument("--max-iter", type=int, default=PipelineConfig.max_iter,
                     help="indicator refinement iteration cap")
    fit.add_argument("--cv-scale", type=float, default=None,
                     help="optional scale factor: prints Cv = scale * alpha")

    ev = sub.add_parser("eval", help="Monte-Carlo SNR sweep of all methods")
    _add_trajectory_flags(ev, with_noise=False)
    ev.add_argument("--snr-grid", type=_snr_grid_flag, default=(40.0, 30.0, 20.0, 10.0),
                    metavar="DB[,DB...]", help="SNR grid in dB; 'inf' allowed")
    ev.add_argument("--trials", type=int, default=20, help="trials per SNR point")
    ev.add_argument("--out", required=True, help="output CSV path; a PNG figure "
                                                 "is rendered alongside it")
    ev.add_argument("--no-figure", action="store_true",
                    help="suppress figure rendering")
    ev.add_argument("--include-oracle", action="store_true",
                    help="also score least squares on the true labels")
    return parser


def _cmd_simulate(args) -> int:
    cfg = _trajectory_config(args, args.noise_std)
    ds = generate(cfg)
    write_dataset_csv(args.out, ds)
    clean = forward_flow(cfg.params, ds.openings, ds.true_modes)
    snr = measure_snr(clean, cfg.noise_std)
    print(f"wrote {len(ds)} samples to {args.out}")
    print(f"achieved SNR: {'inf' if math.isinf(snr) else format(snr, '.2f')} dB")
    return 0


def _cmd_fit(args) -> int:
    ds = read_dataset_csv(args.input, time_ordered=args.time_ordered)
    config_echo = {
        "input": str(args.input),
        "time_ordered": bool(args.time_ordered),
        "tol": float(args.tol),
        "max_iter": int(args.max_iter),
    }
    cfg = PipelineConfig(tol=args.tol, max_iter=args.max_iter)
    try:
        result = fit_pipeline(ds, cfg)
    except EstimationError as exc:
        Path(args.report).write_text(
            dumps_report(error_report_dict(str(exc), exc.diagnostics, config_echo)),
            encoding="utf-8")
        print(f"estimation failed: {exc}", file=sys.stderr)
        return 2

    Path(args.report).write_text(dumps_report(report_dict(result, config_echo)),
                                 encoding="utf-8")
    print(f"alpha={result.params.alpha:.8g} beta={result.params.beta:.8g} "
          f"hysteresis_width={result.params.hysteresis_width:.8g} "
          f"residual_rms={result.residual_rms:.4g}")
    for warning in result.warnings:
        print(f"warning: {warning}")
    if args.cv_scale is not None:
        print(f"Cv = {args.cv_scale * result.params.alpha:.8g} "
              f"(user scale {args.cv_scale:g} x alpha)")

    if args.plot_data:
        write_plot_data_csv(args.plot_data, ds, result)
    figure_path = args.figure
    if figure_path is None and args.plot_data:
        figure_path = str(Path(args.plot_data).with_suffix(".png"))
    if figure_path and not args.no_figure:
        from .figures import render_fit_figure
        render_fit_figure(ds, result, figure_path)
        print(f"figure written to {figure_path}")
    return 0


def _cmd_eval(args) -> int:
    template = _trajectory_config(args, 0.0)
    cfg = EvalConfig(snr_grid_db=args.snr_grid, trials_per_point=args.trials,
                     trajectory=template, seed=args.seed,
                     include_oracle=args.include_oracle)
    rows = run_eval(cfg)
    write_eval_csv(args.out, rows)
    print(f"wrote {len(rows)} rows to {args.out}")
    if not args.no_figure:
        from .figures import render_eval_figure
        figure_path = str(Path(args.out).with_suffix(".png"))
        render_eval_figure(rows, figure_path)
        print(f"figure written to {figure_path}")
    return 0


def main(argv: Optional[List[str]] = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    try:
        if args.command == "simulate":
            return _cmd_simulate(args)
        if args.command == "fit":
            return _cmd_fit(args)
        return _cmd_eval(args)
    except (ValveFitError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
