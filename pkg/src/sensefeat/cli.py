"""Command-line entry point.

    sensefeat --config study.toml --input data/ --output features.csv

Input layout: one directory per participant under --input, each holding the
sensor CSVs (bluetooth.csv, calls.csv, location.csv, screen.csv, sleep.csv,
steps.csv, conversation.csv, contacts.csv). Exit codes: 0 success, 1 usage
or configuration error, 2 partial failure (some participants errored; see
`<output>.report.json`).
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

from .catalog import SENSORS
from .config import load_config
from .errors import SensefeatError
from .pipeline import run_extraction
from .windowing import EPOCHS, GRANULARITIES

log = logging.getLogger(__name__)

LOG_LEVELS = {"error": logging.ERROR, "warn": logging.WARNING, "info": logging.INFO, "debug": logging.DEBUG}


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on usage errors; this tool reserves 2 for partial runs
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _csv_list(text: str) -> list[str]:
    return [item.strip() for item in text.split(",") if item.strip()]


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="sensefeat", description="Extract behavioral features from raw sensor streams.")
    parser.add_argument("--config", required=True, help="study TOML file")
    parser.add_argument("--input", required=True, help="directory of <participant>/<sensor>.csv trees")
    parser.add_argument("--output", required=True, help="feature matrix path")
    parser.add_argument("--format", choices=("csv", "jsonl"), default="csv", help="matrix format")
    parser.add_argument("--sensors", type=_csv_list, default=None, metavar="LIST",
                        help=f"comma-separated subset of: {','.join(SENSORS)}")
    parser.add_argument("--participants", type=_csv_list, default=None, metavar="LIST",
                        help="comma-separated participant ids (default: all found)")
    parser.add_argument("--epochs", type=_csv_list, default=None, metavar="LIST",
                        help=f"comma-separated subset of: {','.join(EPOCHS)}")
    parser.add_argument("--granularities", type=_csv_list, default=None, metavar="LIST",
                        help=f"comma-separated subset of: {','.join(GRANULARITIES)}")
    parser.add_argument("--seed", type=int, default=42, help="seed for the clustering kernels (default 42)")
    parser.add_argument("--jobs", type=int, default=1, help="worker processes across participants")
    return parser


def _configure_logging() -> None:
    level_name = os.environ.get("SENSEFEAT_LOG", "warn").lower()
    level = LOG_LEVELS.get(level_name, logging.WARNING)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")


def main(argv=None) -> int:
    _configure_logging()
    parser = build_parser()
    args = parser.parse_args(argv)

    try:
        config = load_config(args.config)
        if not Path(args.input).is_dir():
            print(f"sensefeat: error: input directory not found: {args.input}", file=sys.stderr)
            return 1
        if args.jobs < 1:
            print("sensefeat: error: --jobs must be >= 1", file=sys.stderr)
            return 1
        return run_extraction(
            config,
            input_dir=args.input,
            output=args.output,
            fmt=args.format,
            sensors=args.sensors,
            participants=args.participants,
            epochs=args.epochs,
            granularities=args.granularities,
            seed=args.seed,
            jobs=args.jobs,
        )
    except SensefeatError as exc:
        print(f"sensefeat: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
