"""Command-line interface: simulate / fit / eval / experiment."""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys

import numpy as np

from . import data, metrics, pipeline
from .errors import ConfigError, DataError, NumericalError
from .gmm import Clustering

EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_NUMERICAL = 4


def _parse_lambdas(text: str) -> tuple[float, ...]:
    try:
        grid = tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError as exc:
        raise ConfigError(f"bad temperature grid {text!r}: {exc}") from exc
    if not grid:
        raise ConfigError("temperature grid is empty")
    return grid


def load_config_file(path: str) -> dict:
    """Flat key = value file; values parsed as JSON when possible."""
    options = {}
    try:
        with open(path) as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    for ln, line in enumerate(lines, start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{ln}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        try:
            options[key] = json.loads(value)
        except json.JSONDecodeError:
            options[key] = value.strip("\"'")
    return options


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mhgmm",
        description=(
            "Sparse model-based clustering: selects the number of clusters and the "
            "informative variables of a Gaussian mixture by sampling configurations "
            "from a tempered posterior."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="write a benchmark dataset as CSV")
    sim.add_argument("experiment", choices=sorted(data.EXPERIMENTS))
    sim.add_argument("--seed", type=int, required=True)
    sim.add_argument("--out", required=True, help="output CSV path")
    sim.add_argument("--header", action=argparse.BooleanOptionalAction, default=False)
    sim.add_argument(
        "--labels",
        action=argparse.BooleanOptionalAction,
        default=True,
        help="append the true cluster label as the final column",
    )

    fit = sub.add_parser("fit", help="run the full selection + clustering pipeline on a CSV")
    fit.add_argument("input", help="CSV file, one observation per row")
    fit.add_argument("--seed", type=int, default=0, help="master seed")
    fit.add_argument("--outdir", required=True)
    fit.add_argument("--config", help="key = value file with any of the long options")
    fit.add_argument("--header", action=argparse.BooleanOptionalAction, default=False)
    fit.add_argument(
        "--labels",
        action=argparse.BooleanOptionalAction,
        default=False,
        help="treat the final column as ground-truth labels",
    )
    fit.add_argument("--splits", type=int, default=None, help="number B of sample splits")
    fit.add_argument("--lambdas", type=str, default=None, help="comma-separated temperature grid")
    fit.add_argument("--steps", type=int, default=None, help="chain length")
    fit.add_argument("--k0", type=int, default=None, help="initial cluster count")
    fit.add_argument("--k-max", type=int, default=None)
    fit.add_argument("--criterion", choices=("aic", "bic"), default=None)
    fit.add_argument("--prune-target", type=int, default=None)
    fit.add_argument("--no-prune", action="store_true")
    fit.add_argument("--fraction", type=float, default=None, help="learning-sample fraction")
    fit.add_argument("--mode", choices=("direct", "aggregated"), default=None)
    fit.add_argument("--jobs", type=int, default=None, help="parallel split workers")

    ev = sub.add_parser("eval", help="ARI between two single-column label files")
    ev.add_argument("labels_a")
    ev.add_argument("labels_b")

    exp = sub.add_parser("experiment", help="replication harness over a benchmark generator")
    exp.add_argument("experiment", choices=sorted(data.EXPERIMENTS))
    exp.add_argument("--seed", type=int, required=True)
    exp.add_argument("--replications", type=int, default=10)
    exp.add_argument("--outdir", default=None)
    exp.add_argument("--splits", type=int, default=None)
    exp.add_argument("--lambdas", type=str, default=None)
    exp.add_argument("--steps", type=int, default=None)
    exp.add_argument("--jobs", type=int, default=None)
    return parser


def _run_config_from_args(args, file_options: dict) -> pipeline.RunConfig:
    fields = dict(seed=args.seed)
    mapping = {
        "splits": "n_splits",
        "steps": "steps",
        "k0": "k0",
        "k_max": "k_max",
        "criterion": "criterion",
        "prune_target": "prune_target",
        "fraction": "fraction",
        "mode": "mode",
        "jobs": "jobs",
    }
    for key, value in file_options.items():
        key = key.replace("-", "_")
        if key == "lambdas":
            fields["lambdas"] = (
                _parse_lambdas(value) if isinstance(value, str) else tuple(float(v) for v in value)
            )
        elif key == "seed":
            fields["seed"] = int(value)
        elif key == "prune":
            fields["prune"] = bool(value)
        elif key in mapping:
            fields[mapping[key]] = value
        else:
            raise ConfigError(f"unknown config key {key!r}")
    for arg_name, field_name in mapping.items():
        value = getattr(args, arg_name, None)
        if value is not None:
            fields[field_name] = value
    if getattr(args, "lambdas", None):
        fields["lambdas"] = _parse_lambdas(args.lambdas)
    if getattr(args, "no_prune", False):
        fields["prune"] = False
    try:
        return pipeline.RunConfig(**fields)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def _read_label_file(path: str) -> Clustering:
    try:
        labels = np.loadtxt(path, dtype=np.int64, ndmin=1)
    except (OSError, ValueError) as exc:
        raise DataError(f"cannot read labels from {path}: {exc}") from exc
    if labels.ndim != 1:
        raise DataError(f"{path} must hold a single label column")
    return Clustering(labels - labels.min() + 1)


def _cmd_simulate(args) -> int:
    dataset = data.simulate(args.experiment, args.seed)
    data.write_csv(
        args.out,
        dataset.values,
        labels=dataset.labels if args.labels else None,
        header=args.header,
    )
    print(f"wrote {dataset.n}x{dataset.d} dataset to {args.out}")
    return 0


def _cmd_fit(args) -> int:
    file_options = load_config_file(args.config) if args.config else {}
    cfg = _run_config_from_args(args, file_options)
    cfg = dataclasses.replace(cfg, outdir=args.outdir)
    dataset = data.read_csv(args.input, has_header=args.header, has_labels=args.labels)
    report = pipeline.run_pipeline(dataset, cfg)
    print(f"selected K={report.config_hat.K}, |S|={report.config_hat.size}")
    print(f"S = {list(report.config_hat.S)}")
    if report.ari is not None:
        print(f"ARI against provided labels: {report.ari:.4f}")
    print(f"outputs in {args.outdir}")
    return 0


def _cmd_eval(args) -> int:
    a = _read_label_file(args.labels_a)
    b = _read_label_file(args.labels_b)
    print(f"{metrics.ari(a, b):.6f}")
    return 0


def _cmd_experiment(args) -> int:
    overrides = {}
    if args.splits is not None:
        overrides["n_splits"] = args.splits
    if args.lambdas:
        overrides["lambdas"] = _parse_lambdas(args.lambdas)
    if args.steps is not None:
        overrides["steps"] = args.steps
    if args.jobs is not None:
        overrides["jobs"] = args.jobs
    template = pipeline.RunConfig(seed=args.seed, **overrides)
    table = pipeline.run_experiment(args.experiment, args.replications, args.seed, template)
    text = table.to_json()
    if args.outdir:
        os.makedirs(args.outdir, exist_ok=True)
        path = os.path.join(args.outdir, f"experiment_{args.experiment}.json")
        with open(path, "w") as fh:
            fh.write(text)
            fh.write("\n")
        print(f"wrote {path}")
    summary = table.summary()
    print(f"K histogram: {summary['k_histogram']}")
    print(
        f"true active {summary['mean_true_active']:.2f}, "
        f"false active {summary['mean_false_active']:.2f}, "
        f"median ARI {summary['ari_median']:.4f}"
    )
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    handlers = {
        "simulate": _cmd_simulate,
        "fit": _cmd_fit,
        "eval": _cmd_eval,
        "experiment": _cmd_experiment,
    }
    try:
        return handlers[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
