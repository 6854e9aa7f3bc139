"""Command-line entry point: ``hrris-covert run`` and ``hrris-covert validate``."""
from __future__ import annotations

import argparse
import dataclasses
import logging
import sys

from .experiment import ConfigError, emit_csv, format_csv, load_config, run_sweep

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="hrris-covert",
                                 description="Covert-rate sweeps for hybrid relay-reflecting surfaces")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run the sweep described by a config file")
    run.add_argument("--config", required=True)
    run.add_argument("--out", help="CSV path (defaults to sweep.output, else stdout)")
    run.add_argument("--trials", type=int)
    run.add_argument("--seed", type=int, help="base seed (unsigned 64-bit)")
    val = sub.add_parser("validate", help="check a config file and exit")
    val.add_argument("--config", required=True)
    return ap


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        params, spec, settings = load_config(args.config)
        if args.command == "run":
            overrides = {}
            if args.trials is not None:
                overrides["trials"] = args.trials
            if args.seed is not None:
                overrides["base_seed"] = args.seed
            spec = dataclasses.replace(spec, **overrides)
    except (ConfigError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    if args.command == "validate":
        print(f"ok: {len(spec.n_values)} N x {len(spec.k_values)} K x {spec.trials} trials")
        return EXIT_OK

    try:
        result = run_sweep(params, spec, settings)
        out = args.out or spec.output
        if out:
            emit_csv(result, out)
        else:
            sys.stdout.write(format_csv(result))
    except Exception as exc:
        print(f"runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    for n, k, trial, err in result.failures:
        print(f"failed N={n} K={k} trial={trial}: {err}", file=sys.stderr)
    return EXIT_RUNTIME if result.failures else EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
