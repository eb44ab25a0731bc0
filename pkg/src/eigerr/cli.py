"""Command-line front end for the experiment runner.

Every flag can also be supplied through an environment variable with the
``EIGERR_`` prefix (explicit flags win). Exit codes: 0 success, 1
configuration error, 2 runtime error (with a machine-readable JSON error
record on stderr).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .experiments import EXPERIMENTS, ConfigError, ExperimentConfig, run, validate

ENV_PREFIX = "EIGERR_"

_FLAGS = {
    # name, parser, help
    "p": (int, "matrix size / vertex count"),
    "k": (int, "graph degree"),
    "n": (str, "sample count(s), comma separated, e.g. 1e7 or 1e3,1e4,1e5"),
    "R": (int, "Wishart replicates per matrix"),
    "M": (int, "matrices per ensemble"),
    "lambda0": (float, "window center eigenvalue"),
    "delta": (float, "window half-width"),
    "seed": (int, "master RNG seed"),
    "out": (str, "output directory"),
    "threads": (int, "worker threads for matrix/replicate parallelism"),
}

_DEFAULTS = {
    "p": 100, "k": 20, "n": "1e7", "R": 10, "M": 10,
    "lambda0": 20.0, "delta": 1.0, "seed": 0, "out": "out", "threads": 1,
}


def _parse_n(text):
    try:
        values = tuple(int(float(part)) for part in str(text).split(",") if part.strip())
    except ValueError as exc:
        raise ConfigError(f"cannot parse sample counts from {text!r}") from exc
    if not values:
        raise ConfigError("no sample counts given")
    return values


def _add_flags(parser):
    for name, (caster, help_text) in _FLAGS.items():
        parser.add_argument(f"--{name}", type=str, default=None,
                            help=f"{help_text} (env {ENV_PREFIX}{name.upper()}, "
                                 f"default {_DEFAULTS[name]})")


def _resolve(args):
    values = {}
    for name, (caster, _) in _FLAGS.items():
        raw = getattr(args, name)
        if raw is None:
            raw = os.environ.get(ENV_PREFIX + name.upper())
        if raw is None:
            raw = _DEFAULTS[name]
        try:
            values[name] = caster(raw)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad value for --{name}: {raw!r}") from exc
    values["n"] = _parse_n(values["n"])
    values["out"] = Path(values["out"])
    return ExperimentConfig(**values)


def build_parser():
    parser = argparse.ArgumentParser(
        prog="eigerr",
        description="Eigenvector-error experiments on graph-Laplacian covariance ensembles",
        exit_on_error=False,
    )
    sub = parser.add_subparsers(dest="command", required=True)

    runp = sub.add_parser("run", help="run one experiment", exit_on_error=False)
    runp.add_argument("experiment", choices=sorted(EXPERIMENTS),
                      help="experiment name")
    _add_flags(runp)

    valp = sub.add_parser("validate", help="pre-flight configuration checks",
                          exit_on_error=False)
    _add_flags(valp)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except argparse.ArgumentError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except SystemExit as exc:  # --help or argparse-internal exits
        return 0 if exc.code in (0, None) else 1

    try:
        config = _resolve(args)
        if args.command == "validate":
            report = validate(config)
            json.dump(report, sys.stdout, indent=2, sort_keys=True)
            sys.stdout.write("\n")
            return 0
        manifest = run(args.experiment, config)
        json.dump(manifest, sys.stdout, indent=2, sort_keys=True)
        sys.stdout.write("\n")
        return 0
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - surfaced as a machine-readable record
        record = {
            "error": type(exc).__name__,
            "message": str(exc),
            "command": args.command,
            "experiment": getattr(args, "experiment", None),
        }
        json.dump(record, sys.stderr, sort_keys=True)
        sys.stderr.write("\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
