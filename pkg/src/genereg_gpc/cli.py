"""Command-line front end: ``genereg-gpc <subcommand> [--config FILE] ...``."""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

import yaml

from .config import ConfigError, load_config
from .integrate import IntegrationError
from .io import read_csv, write_csv
from .studies import EXIT_FAIL, STUDIES
from .svg import write_chart


def _parse_override(text: str):
    key, sep, raw = text.partition("=")
    if not sep or "." not in key:
        raise argparse.ArgumentTypeError(f"override must look like section.key=value, got {text!r}")
    return key, yaml.safe_load(raw)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="genereg-gpc",
        description="Stochastic Galerkin studies of an mRNA/microRNA kinetic model with a random source.",
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="YAML run configuration")
    common.add_argument("--out", type=Path, default=Path("out"), help="output directory (default: out)")
    common.add_argument("--svg", action="store_true", help="also write SVG line charts")
    common.add_argument("--threads", type=int, default=1, help="worker threads for grid evaluation")
    common.add_argument("--set", dest="overrides", action="append", type=_parse_override, default=[],
                        metavar="SECTION.KEY=VALUE", help="override a config value (repeatable)")
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "decay": "perturbation decay with theorem bounds (Galerkin and collocation)",
        "converge": "Galerkin error against a collocation oracle over a list of K",
        "cv-sweep": "coefficient of variation with and without microRNA over parameter grids",
        "check": "analytic conditions and theorem constants",
        "tensors": "dump triple-product tensor and Upsilon with its spectrum",
    }
    for name, text in helps.items():
        sub.add_parser(name, parents=[common], help=text)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.threads < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return EXIT_FAIL
    try:
        cfg = load_config(args.config, dict(args.overrides))
    except (ConfigError, OSError, yaml.YAMLError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_FAIL

    try:
        result = STUDIES[args.command](cfg, threads=args.threads)
    except IntegrationError as exc:
        print(f"integration aborted: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL

    args.out.mkdir(parents=True, exist_ok=True)
    for name, (header, rows) in result.tables.items():
        path = write_csv(args.out / f"{name}.csv", header, rows)
        print(f"wrote {path}")
    if args.svg:
        for k, spec in enumerate(result.charts):
            header, rows = read_csv(args.out / f"{spec.table}.csv")
            path = write_chart(args.out / f"{spec.table}_{k}.svg", spec, header, rows)
            print(f"wrote {path}")
    for line in result.summary:
        print(line)
    return result.exit_code


if __name__ == "__main__":
    sys.exit(main())
