"""Command-line entry point.

    stcp run --config configs/poisson.json --out runs/poisson
    stcp sweep --config configs/wave.json --method aer
    stcp validate --config configs/poisson.json --assert

Each subcommand drives one pipeline stage (plus ``run`` for all of them);
stages resolve their own upstream artifacts, reusing anything already
sealed under the output directory.  Exit codes: 0 success, 2 config
error, 3 data error, 4 divergence, 5 acceptance-check failure.
"""

from __future__ import annotations

import argparse
import sys

from . import pipeline
from .errors import ConfigError, DataError, DivergenceError
from .experiments import config_from_dict, parse_config

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_DIVERGENCE = 4
EXIT_ASSERT = 5

_METHOD_COMMANDS = ("train", "calibrate", "band", "validate", "sweep", "study-ncal")


def parse_alpha_grid(text: str) -> tuple[float, ...]:
    """lo:hi:step, endpoints inclusive up to rounding (10 decimal places)."""
    parts = text.split(":")
    if len(parts) != 3:
        raise ConfigError(f"--alphas wants lo:hi:step, got {text!r}")
    try:
        lo, hi, step = (float(p) for p in parts)
    except ValueError as exc:
        raise ConfigError(f"--alphas wants numbers, got {text!r}") from exc
    if step <= 0 or not lo <= hi:
        raise ConfigError(f"--alphas needs lo <= hi and step > 0, got {text!r}")
    grid = []
    k = 0
    while True:
        v = round(lo + k * step, 10)
        if v > hi + 1e-12:
            break
        grid.append(v)
        k += 1
    return tuple(grid)


def parse_sizes(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(p) for p in text.split(","))
    except ValueError as exc:
        raise ConfigError(f"--sizes wants comma-separated integers, got {text!r}") from exc


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="stcp",
        description="Conformal prediction bands for PDE surrogate models.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, help_text):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="experiment config JSON")
        p.add_argument("--out", default=None, help="run directory (default runs/<name>)")
        p.add_argument("--seed", type=int, default=None, help="override the master seed")
        p.add_argument("--workers", type=int, default=None, help="dataset-generation workers")
        if name in _METHOD_COMMANDS:
            p.add_argument("--method", choices=("aer", "std", "cqr"), default=None,
                           help="restrict to one method (default: all configured)")
        return p

    add("gen", "generate the train/cal/val datasets")
    add("train", "fit the surrogate models")
    add("calibrate", "score the calibration set and persist quantiles")
    band = add("band", "build prediction bands at one alpha")
    band.add_argument("--alpha", type=float, default=0.1)
    val = add("validate", "empirical coverage report at one alpha")
    val.add_argument("--alpha", type=float, default=0.1)
    val.add_argument("--assert", dest="assert_", action="store_true",
                     help="after reporting, check sweep CSVs against the coverage bound")
    sweep = add("sweep", "coverage sweep over the alpha grid")
    sweep.add_argument("--alphas", type=str, default=None, help="override grid as lo:hi:step")
    study = add("study-ncal", "coverage sweeps at several calibration sizes")
    study.add_argument("--sizes", type=str, default=None, help="comma-separated sizes")
    add("plot", "emit SVG figures from existing reports")
    add("run", "all stages: gen, train, calibrate, band, validate, sweep, study, plot")
    return parser


def _load_config(args):
    cfg = parse_config(args.config)
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.workers is not None:
        overrides["workers"] = args.workers
    if overrides:
        doc = dict(cfg.raw)
        doc.update(overrides)
        cfg = config_from_dict(doc)
    return cfg


def _methods(cfg, args):
    if getattr(args, "method", None):
        if args.method not in cfg.methods:
            raise ConfigError(
                f"--method {args.method} is not configured (methods: {list(cfg.methods)})"
            )
        return (args.method,)
    return cfg.methods


def _dispatch(args) -> int:
    cfg = _load_config(args)
    out = args.out if args.out is not None else pipeline.default_out(cfg)

    if args.command == "gen":
        for split in pipeline.SPLITS:
            path = pipeline.stage_gen(cfg, out, split)
            print(f"gen {split}: {path}")
        return EXIT_OK

    if args.command == "train":
        from .experiments import roles_for_methods

        for role in roles_for_methods(_methods(cfg, args)):
            path = pipeline.stage_train(cfg, out, role)
            print(f"train {role}: {path}")
        return EXIT_OK

    if args.command == "calibrate":
        for method in _methods(cfg, args):
            path = pipeline.stage_calibrate(cfg, out, method)
            print(f"calibrate {method}: {path}")
        return EXIT_OK

    if args.command == "band":
        for method in _methods(cfg, args):
            path = pipeline.stage_band(cfg, out, method, args.alpha)
            print(f"band {method} alpha={args.alpha:g}: {path}")
        return EXIT_OK

    if args.command == "validate":
        for method in _methods(cfg, args):
            path = pipeline.stage_validate(cfg, out, method, args.alpha)
            print(f"validate {method} alpha={args.alpha:g}: {path}")
        if args.assert_:
            return _assert_sweeps(cfg, out, _methods(cfg, args))
        return EXIT_OK

    if args.command == "sweep":
        grid = parse_alpha_grid(args.alphas) if args.alphas else None
        for method in _methods(cfg, args):
            path = pipeline.stage_sweep(cfg, out, method, grid)
            print(f"sweep {method}: {path}")
        return EXIT_OK

    if args.command == "study-ncal":
        sizes = parse_sizes(args.sizes) if args.sizes else None
        for method in _methods(cfg, args):
            for path in pipeline.stage_study(cfg, out, method, sizes):
                print(f"study {method}: {path}")
        return EXIT_OK

    if args.command == "plot":
        for path in pipeline.stage_plot(cfg, out):
            print(f"plot: {path}")
        return EXIT_OK

    if args.command == "run":
        art = pipeline.run_experiment(cfg, out)
        for split, path in art.datasets.items():
            print(f"gen {split}: {path}")
        for role, path in art.models.items():
            print(f"train {role}: {path}")
        for method, path in art.quantiles.items():
            print(f"calibrate {method}: {path}")
        for (method, alpha), path in art.bands.items():
            print(f"band {method} alpha={alpha:g}: {path}")
        for path in art.reports:
            print(f"report: {path}")
        for path in art.figures:
            print(f"figure: {path}")
        return EXIT_OK

    raise ConfigError(f"unknown command {args.command!r}")


def _assert_sweeps(cfg, out, methods) -> int:
    from pathlib import Path

    failed = False
    for method in methods:
        path = Path(out) / "reports" / f"sweep-{method}.csv"
        if not path.exists():
            print(f"assert {method}: missing sweep CSV {path}", file=sys.stderr)
            failed = True
            continue
        failures = pipeline.assert_sweep(path)
        if failures:
            failed = True
            for line in failures:
                print(f"assert {method}: {line}", file=sys.stderr)
        else:
            print(f"assert {method}: coverage bound holds for all rows")
    return EXIT_ASSERT if failed else EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _dispatch(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DivergenceError as exc:
        print(f"divergence: {exc}", file=sys.stderr)
        return EXIT_DIVERGENCE
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
