"""``oamlab`` command line.

Usage: ``oamlab <command> --config <path> [--out DIR] [--threads N] [--seed S]``
and ``oamlab reproduce <figure> [--config <path>] ...``. Metrics are printed
as ``key=value`` lines. Exit codes: 0 success, 2 configuration error,
3 numeric failure.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
import warnings

from .config import COMMANDS, FIGURES, ConfigError, RunConfig, parse_config
from .recipes import run_pipeline

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3

log = logging.getLogger("oamlab")


def build_parser():
    p = argparse.ArgumentParser(prog="oamlab",
                                description="Mixed-OAM electron state simulation pipelines.")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("figure", nargs="?", help="figure name for 'reproduce' "
                   f"({', '.join(FIGURES)})")
    p.add_argument("--config", help="TOML run configuration")
    p.add_argument("--out", default=None, help="output directory (default [output].dir "
                   "or ./oamlab-out)")
    p.add_argument("--threads", type=int, default=None,
                   help="FFT worker threads (fallback: OAMLAB_THREADS)")
    p.add_argument("--seed", type=int, default=None, help="overrides the config seed")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def _threads(arg):
    if arg is not None:
        value = arg
    else:
        env = os.environ.get("OAMLAB_THREADS")
        if not env:
            return None
        try:
            value = int(env)
        except ValueError:
            raise ConfigError([f"OAMLAB_THREADS={env!r} is not an integer"]) from None
    if value < 1:
        raise ConfigError(["thread count must be >= 1"])
    return value


def _format(value):
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    logging.captureWarnings(True)
    try:
        if args.command != "reproduce" and args.figure is not None:
            raise ConfigError([f"unexpected argument {args.figure!r}"])
        if args.config:
            cfg = parse_config(args.config)
            if cfg.command != args.command:
                raise ConfigError([f"config command {cfg.command!r} does not match "
                                   f"{args.command!r}"])
        elif args.command == "reproduce":
            cfg = RunConfig("reproduce")
        else:
            raise ConfigError(["--config is required"])
        if args.seed is not None:
            cfg.seed = args.seed
        if args.command == "reproduce":
            figure = args.figure or cfg.get("reproduce", "figure")
            if figure not in FIGURES:
                raise ConfigError([f"figure must be one of {', '.join(FIGURES)}"])
        else:
            figure = None
        threads = _threads(args.threads if args.threads is not None
                           else cfg.get("run", "threads"))
        out = args.out or cfg.get("output", "dir") or "oamlab-out"
        with warnings.catch_warnings():
            warnings.simplefilter("default")
            run = run_pipeline(cfg, out, threads=threads, figure=figure)
    except ConfigError as exc:
        for e in exc.errors:
            print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except (ArithmeticError, ValueError, RuntimeError, MemoryError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    for key, value in run.metrics.items():
        print(f"{key}={_format(value)}")
    print(f"manifest={run.out / 'manifest.json'}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
