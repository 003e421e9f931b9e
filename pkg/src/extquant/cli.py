"""Command-line front end.

Three subcommands:
  simulate  -- run the Monte Carlo study and write a plot-ready CSV
  fit-tail  -- fit a GP tail to one column of a CSV, report JSON
  regress   -- fit a pinball quantile model to CSV data, report JSON

Every successful command writes a `<out>.manifest.json` sidecar echoing the
configuration, so any output can be reproduced bit-exactly from its manifest.
Exit codes: 0 success, 1 runtime/data error, 2 usage error.
"""

import argparse
import csv
import json
import sys
import time

import numpy as np

from . import __version__, estimators, pinball
from .distributions import STUDY_DISTRIBUTIONS
from .estimators import (
    ConvergenceError,
    DegenerateSampleError,
    InsufficientDataError,
)
from .simstudy import AggregationError, StudyConfig, default_tau_grid, run_study

DEFAULT_SEED = 20240831


def _fmt(x):
    """Shortest round-trip decimal for floats; plain str otherwise."""
    if isinstance(x, float):
        return repr(x)
    return str(x)


def _write_manifest(out_path, command, config, duration, diagnostics):
    manifest = {
        "artifact_version": __version__,
        "command": command,
        "config": config,
        "duration_sec": duration,
        "diagnostics": diagnostics,
    }
    with open(str(out_path) + ".manifest.json", "w", newline="\n") as fh:
        json.dump(manifest, fh, indent=2)
        fh.write("\n")


def _read_csv_columns(path):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"input file {path} is empty")
        rows = [row for row in reader if row]
    if not rows:
        raise ValueError(f"input file {path} has no data rows")
    columns = {}
    for j, name in enumerate(header):
        try:
            columns[name] = np.array([float(r[j]) for r in rows])
        except (ValueError, IndexError):
            columns[name] = None  # non-numeric or ragged column
    return header, columns


def _numeric_column(path, name):
    header, columns = _read_csv_columns(path)
    if name is None:
        numeric = [h for h in header if columns[h] is not None]
        if len(numeric) != 1:
            raise ValueError(
                f"--column is required: {path} has {len(numeric)} numeric columns"
            )
        name = numeric[0]
    if name not in columns:
        raise ValueError(f"column {name!r} not found in {path} (has {header})")
    if columns[name] is None:
        raise ValueError(f"column {name!r} in {path} is not numeric")
    return columns[name]


def _prob_flag(parser, value, flag):
    if not 0.0 < value < 1.0:
        parser.error(f"{flag} must be in (0, 1), got {value}")
    return value


def cmd_simulate(parser, args):
    for flag, val in (
        ("--tau-min", args.tau_min),
        ("--tau-max", args.tau_max),
        ("--threshold", args.threshold),
    ):
        _prob_flag(parser, val, flag)
    if args.tau_min >= args.tau_max:
        parser.error("--tau-min must be < --tau-max")
    if args.tau_min < args.threshold:
        parser.error("--tau-min must be >= --threshold")
    if args.n < 100:
        parser.error("--n must be >= 100")
    if args.reps < 2:
        parser.error("--reps must be >= 2")
    if args.grid < 2:
        parser.error("--grid must be >= 2")
    if args.threads < 1:
        parser.error("--threads must be >= 1")
    if args.seed < 0:
        parser.error("--seed must be non-negative")

    names = list(STUDY_DISTRIBUTIONS) if args.dist == "all" else [args.dist]
    tau_grid = default_tau_grid(args.tau_min, args.tau_max, args.grid)

    start = time.time()
    diagnostics = {}
    rows = []
    for name in names:
        cfg = StudyConfig(
            dist=STUDY_DISTRIBUTIONS[name],
            n=args.n,
            reps=args.reps,
            tau_grid=tau_grid,
            threshold_level=args.threshold,
            seed=args.seed,
            e_max_reps=args.e_max_reps,
        )
        try:
            summary = run_study(cfg, threads=args.threads)
        except AggregationError as exc:
            print(f"error: {name}: {exc}", file=sys.stderr)
            return 1
        diagnostics[name] = {
            "gp_fail_count": summary.gp_fail_count,
            "boundary_count": summary.boundary_count,
            "e_max": summary.e_max,
            "e_max_se": summary.e_max_se,
            "mean_sample_max": summary.mean_sample_max,
        }
        for j, tau in enumerate(summary.tau_grid):
            rows.append(
                [
                    name,
                    float(tau),
                    float(summary.true_q[j]),
                    float(summary.emp_mean[j]),
                    float(summary.emp_lo[j]),
                    float(summary.emp_hi[j]),
                    float(summary.gp_mean[j]),
                    float(summary.gp_lo[j]),
                    float(summary.gp_hi[j]),
                    summary.e_max,
                    summary.gp_fail_count,
                ]
            )

    with open(args.out, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(
            [
                "dist",
                "tau",
                "true_q",
                "emp_mean",
                "emp_lo",
                "emp_hi",
                "gp_mean",
                "gp_lo",
                "gp_hi",
                "e_max",
                "gp_fail_count",
            ]
        )
        for row in rows:
            writer.writerow([_fmt(v) for v in row])

    config = {
        "dist": args.dist,
        "n": args.n,
        "reps": args.reps,
        "tau_min": args.tau_min,
        "tau_max": args.tau_max,
        "grid": args.grid,
        "threshold": args.threshold,
        "seed": args.seed,
        "threads": args.threads,
        "e_max_reps": args.e_max_reps,
        "out": str(args.out),
    }
    _write_manifest(args.out, "simulate", config, time.time() - start, diagnostics)
    return 0


def cmd_fit_tail(parser, args):
    if not 0.0 <= args.threshold_quantile < 1.0:
        parser.error("--threshold-quantile must be in [0, 1)")
    for t in args.tau:
        _prob_flag(parser, t, "--tau")

    start = time.time()
    try:
        values = _numeric_column(args.input, args.column)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    try:
        if args.threshold_quantile == 0.0:
            # fall back to the sample minimum as the threshold
            u = float(np.min(values))
            excesses = values[values > u] - u
            fit = estimators.fit_gp_mle(excesses)
            tail = estimators.TailModel(
                u=u,
                zeta_u=excesses.size / values.size,
                gp=fit.params,
                n_exc=int(excesses.size),
                n=int(values.size),
                log_lik=fit.log_lik,
                boundary=fit.boundary,
            )
        else:
            tail = estimators.fit_tail(values, args.threshold_quantile)
        quantiles = [
            {"tau": t, "value": estimators.gp_quantile(tail, t)} for t in args.tau
        ]
    except (InsufficientDataError, DegenerateSampleError, ConvergenceError,
            ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    report = {
        "u": tail.u,
        "zeta_u": tail.zeta_u,
        "n_exc": tail.n_exc,
        "sigma": tail.gp.sigma,
        "xi": tail.gp.xi,
        "log_lik": tail.log_lik,
        "boundary": tail.boundary,
        "quantiles": quantiles,
    }
    with open(args.out, "w", newline="\n") as fh:
        json.dump(report, fh, indent=2)
        fh.write("\n")

    config = {
        "input": str(args.input),
        "column": args.column,
        "threshold_quantile": args.threshold_quantile,
        "tau": list(args.tau),
        "out": str(args.out),
    }
    _write_manifest(args.out, "fit-tail", config, time.time() - start, {})
    return 0


def _model_params(model):
    if isinstance(model, pinball.ConstantModel):
        return {"beta": model.beta}
    if isinstance(model, pinball.LinearModel):
        return {
            "intercept": model.intercept,
            "weights": [float(w) for w in model.weights],
        }
    return {"layer_sizes": model.layer_sizes, "activation": model.activation}


def cmd_regress(parser, args):
    _prob_flag(parser, args.tau, "--tau")
    if args.seed < 0:
        parser.error("--seed must be non-negative")

    start = time.time()
    try:
        header, columns = _read_csv_columns(args.input)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    if args.response not in columns or columns[args.response] is None:
        print(
            f"error: response column {args.response!r} not found or not numeric "
            f"in {args.input}",
            file=sys.stderr,
        )
        return 1
    covariate_names = [
        h for h in header if h != args.response and columns[h] is not None
    ]
    y = columns[args.response]

    try:
        if args.model == "constant":
            model = pinball.fit_constant(y, args.tau)
        else:
            if not covariate_names:
                raise ValueError("no numeric covariate columns in input")
            x = np.column_stack([columns[h] for h in covariate_names])
            data = pinball.RegressionData(x=x, y=y)
            cfg = pinball.TrainConfig(seed=args.seed)
            model = pinball.fit_quantile_model(data, args.tau, args.model, cfg)

        predictions = None
        if args.predict is not None:
            pheader, pcolumns = _read_csv_columns(args.predict)
            if args.model == "constant":
                n_query = len(next(iter(pcolumns.values())))
                predictions = [model.beta] * n_query
            else:
                missing = [h for h in covariate_names if h not in pcolumns]
                if missing:
                    raise ValueError(
                        f"query file {args.predict} is missing covariate "
                        f"column(s) {missing}"
                    )
                xq = np.column_stack([pcolumns[h] for h in covariate_names])
                predictions = [float(v) for v in model.predict(xq)]
    except (ValueError, ConvergenceError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    report = {
        "model": args.model,
        "tau": args.tau,
        "covariates": covariate_names,
        "params": _model_params(model),
        "train_pinball_risk": model.train_loss,
    }
    if predictions is not None:
        report["predictions"] = predictions
    with open(args.out, "w", newline="\n") as fh:
        json.dump(report, fh, indent=2)
        fh.write("\n")

    config = {
        "input": str(args.input),
        "response": args.response,
        "tau": args.tau,
        "model": args.model,
        "predict": None if args.predict is None else str(args.predict),
        "seed": args.seed,
        "out": str(args.out),
    }
    _write_manifest(args.out, "regress", config, time.time() - start, {})
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="extquant",
        description="Extreme quantile estimation: simulation study, "
        "GP tail fitting, and pinball quantile regression.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="run the Monte Carlo study")
    p_sim.add_argument(
        "--dist",
        choices=[*STUDY_DISTRIBUTIONS, "all"],
        default="all",
    )
    p_sim.add_argument("--n", type=int, default=1000)
    p_sim.add_argument("--reps", type=int, default=10_000)
    p_sim.add_argument("--tau-min", type=float, default=0.99)
    p_sim.add_argument("--tau-max", type=float, default=0.99999)
    p_sim.add_argument("--grid", type=int, default=50)
    p_sim.add_argument("--threshold", type=float, default=0.95)
    p_sim.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p_sim.add_argument("--threads", type=int, default=1)
    p_sim.add_argument("--e-max-reps", type=int, default=100_000)
    p_sim.add_argument("--out", default="simstudy.csv")

    p_tail = sub.add_parser("fit-tail", help="fit a GP tail to a data column")
    p_tail.add_argument("--input", required=True)
    p_tail.add_argument("--column", default=None)
    p_tail.add_argument("--threshold-quantile", type=float, default=0.95)
    p_tail.add_argument("--tau", type=float, action="append", default=[])
    p_tail.add_argument("--out", default="tail.json")

    p_reg = sub.add_parser("regress", help="fit a pinball quantile model")
    p_reg.add_argument("--input", required=True)
    p_reg.add_argument("--response", required=True)
    p_reg.add_argument("--tau", type=float, required=True)
    p_reg.add_argument(
        "--model", choices=["constant", "linear", "mlp"], default="constant"
    )
    p_reg.add_argument("--predict", default=None)
    p_reg.add_argument("--seed", type=int, default=0)
    p_reg.add_argument("--out", default="model.json")

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    handlers = {
        "simulate": cmd_simulate,
        "fit-tail": cmd_fit_tail,
        "regress": cmd_regress,
    }
    return handlers[args.command](parser, args)


if __name__ == "__main__":
    sys.exit(main())
