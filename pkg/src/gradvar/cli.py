"""Command-line entry point.

Subcommands: ``run``, ``depth-compare``, ``estimate-constants``,
``list-functions``.  Exit codes: 0 on success, 2 on configuration errors,
3 on I/O errors.
"""

from __future__ import annotations

import argparse
import sys

from .harness import (
    ConfigError,
    depth_comparison,
    estimate_constants,
    load_config,
    run_experiment,
)
from .testbed import REGISTRY, catalog_names


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gradvar",
        description="Seeded optimization experiments with oracle-call and depth accounting.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    for name, helptext in (
        ("run", "run one experiment config across its seeds"),
        ("depth-compare", "compare sequential rounds of smoothed vs baseline runs"),
        ("estimate-constants", "estimate regularity constants over radii"),
    ):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("config", help="path to a JSON experiment config")
        p.add_argument("--out", metavar="DIR", help="override the config's output directory")
        p.add_argument("--seed-override", type=int, metavar="N", help="run only this seed")
        p.add_argument("--quiet", action="store_true", help="suppress progress output")

    sub.add_parser("list-functions", help="list catalog functions and their parameters")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = _parser().parse_args(argv)

    if args.command == "list-functions":
        for name in catalog_names():
            print(f"{name}: {REGISTRY[name]}")
        return 0

    try:
        cfg = load_config(args.config)
        if args.seed_override is not None:
            cfg["seeds"] = [args.seed_override]
        if args.command == "run":
            run_experiment(cfg, out_dir=args.out, quiet=args.quiet)
        elif args.command == "depth-compare":
            depth_comparison(cfg, out_dir=args.out, quiet=args.quiet)
        else:
            estimate_constants(cfg, out_dir=args.out, quiet=args.quiet)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
