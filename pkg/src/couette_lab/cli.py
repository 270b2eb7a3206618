"""Command-line entry point.

    couette-lab SUBCOMMAND CONFIG.json [--output-dir DIR] [-v]

Exit status: 0 on success, 1 for usage or configuration errors, 2 for
numerical failures.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from typing import List, Optional

from . import harness
from .errors import ConfigError, NumericalError

COMMANDS = {
    "resolvent-sweep": harness.resolvent_sweep,
    "decay-fit": harness.decay_fit,
    "verify-estimates": harness.verify_estimates,
    "simulate": harness.simulate,
    "threshold-scan": harness.threshold_scan_cmd,
    "audit-energy": harness.audit_energy,
}


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="couette-lab", description="Numerical experiments on stratified Couette flow.")
    p.add_argument("command", choices=sorted(COMMANDS), help="experiment to run")
    p.add_argument("config", help="JSON configuration file")
    p.add_argument("--output-dir", default=".", help="directory for CSV/JSON outputs (default: .)")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    return p


def load_config(path: str) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            cfg = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a JSON object")
    return cfg


def main(argv: Optional[List[str]] = None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        sys.stderr.write(parser.format_usage())
        sys.stderr.write(f"error: {exc}\n")
        return 1
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        summary = COMMANDS[args.command](load_config(args.config), args.output_dir)
    except ConfigError as exc:
        sys.stderr.write(f"configuration error: {exc}\n")
        return 1
    except NumericalError as exc:
        sys.stderr.write(f"numerical failure: {exc}\n")
        return 2
    except (FloatingPointError, ArithmeticError) as exc:
        sys.stderr.write(f"numerical failure: {exc}\n")
        return 2
    if args.verbose:
        sys.stderr.write(harness.json_text(args.command, summary))
    return 0


if __name__ == "__main__":
    sys.exit(main())
