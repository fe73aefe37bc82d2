"""Command-line entry point.

One executable with a subcommand per experiment; the subcommand must match
the "command" value inside the JSON config.  Exit codes: 0 success,
2 configuration error, 3 numerical error.
"""

from __future__ import annotations

import argparse
import os
import sys

from .config import COMMANDS, parse_config
from .errors import ConfigError, NumericalError
from .runner import run_experiment


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nhdiff",
        description=(
            "Entry-wise Brownian diffusion of non-hermitian matrices: "
            "Monte-Carlo ensembles, exact characteristic-polynomial "
            "evaluation, large-N solvers and finite-size asymptotics."
        ),
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name, help=f"run a '{name}' experiment")
        p.add_argument("--config", required=True, help="path to the JSON config")
        p.add_argument("--output", default=None, help="output directory (overrides config)")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument("--threads", type=int, default=1, help="worker threads for trials")
        p.add_argument("--no-plot", action="store_true", help="skip figure rendering")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        try:
            with open(args.config, "r", encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from exc
        config = parse_config(text, base_dir=os.path.dirname(os.path.abspath(args.config)))
        if config.command != args.subcommand:
            raise ConfigError(
                f"config command {config.command!r} does not match "
                f"subcommand {args.subcommand!r}"
            )
        if args.seed is not None:
            if args.seed < 0 or args.seed >= 2**64:
                raise ConfigError("--seed must be an unsigned 64-bit integer")
            config.seed = args.seed
        manifest = run_experiment(
            config,
            output_dir=args.output,
            threads=args.threads,
            plot=not args.no_plot,
        )
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return 3
    outdir = args.output if args.output is not None else config.output_dir
    print(f"{config.command}: wrote {len(manifest.outputs)} files to {outdir}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
