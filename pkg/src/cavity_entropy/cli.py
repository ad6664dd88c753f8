"""Command-line entry point: ``cavity-entropy <experiment> --config cfg.json``."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
import time
from pathlib import Path
from typing import Optional, Sequence

from . import __version__
from .errors import (IntegrationError, InvalidStateError, NormalizationError, PositivityError,
                     RootBracketError, TruncationError)
from .experiments import EXPERIMENTS, RUNNERS, ConfigError, parse_config

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_VALIDATION = 4

log = logging.getLogger("cavity_entropy")

# failures of the numerics rather than of the inputs
NUMERICAL_ERRORS = (PositivityError, IntegrationError, TruncationError, NormalizationError,
                    InvalidStateError, RootBracketError, FloatingPointError)


def format_value(v) -> str:
    """Shortest round-trip decimal for floats; plain text otherwise."""
    if isinstance(v, bool):
        return str(int(v))
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([format_value(v) for v in row])


def manifest_path(csv_path: Path) -> Path:
    return csv_path.with_name(csv_path.stem + ".manifest.json")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cavity-entropy", description=__doc__)
    parser.add_argument("experiment", choices=EXPERIMENTS)
    parser.add_argument("--config", required=True, type=Path, help="flat JSON config file")
    parser.add_argument("--jobs", type=int, default=1, help="worker processes for sweeps")
    parser.add_argument("--out", type=Path, default=None, help="CSV output path")
    parser.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")

    try:
        raw = json.loads(args.config.read_text())
        cfg = parse_config(raw, args.experiment)
        if args.jobs < 1:
            raise ConfigError("--jobs must be >= 1")
    except (OSError, json.JSONDecodeError, ConfigError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    out = args.out or Path(cfg["out"] or f"{args.experiment}.csv")
    start = time.perf_counter()
    try:
        header, rows, extra = RUNNERS[args.experiment](cfg, jobs=args.jobs)
    except NUMERICAL_ERRORS as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    wall = time.perf_counter() - start

    out.parent.mkdir(parents=True, exist_ok=True)
    write_csv(out, header, rows)
    checks = extra.pop("checks", None)
    manifest = {
        "config": cfg.echo(),
        "n_max": extra.pop("n_max", None),
        "wall_time_s": wall,
        "version": __version__,
        "csv": str(out),
        "rows": len(rows),
        **extra,
    }
    if checks is not None:
        manifest["checks"] = checks
        manifest["passed"] = all(c["passed"] for c in checks)
    manifest_path(out).write_text(json.dumps(manifest, indent=2, sort_keys=True, default=str) + "\n")
    log.info("wrote %s (%d rows) in %.2fs", out, len(rows), wall)

    if checks is not None and not manifest["passed"]:
        failed = [c["name"] for c in checks if not c["passed"]]
        print(f"validation failed: {', '.join(failed)}", file=sys.stderr)
        return EXIT_VALIDATION
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
