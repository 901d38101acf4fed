"""``migrate`` command line: run experiments, re-render reports, analyze trees."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

from libmigrate.analyzer import TargetsManifest, analyze_tree
from libmigrate.config import load_config
from libmigrate.errors import MigrationError
from libmigrate.orchestrator import run_experiment
from libmigrate.report import ExperimentReport, emit_report


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="migrate", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run the strategy x phase experiment matrix")
    run.add_argument("--config", required=True, type=Path)
    run.add_argument("--mode", choices=["live", "record", "replay"])
    run.add_argument("--strategy", action="append", dest="strategies", metavar="S",
                     help="zero-shot, one-shot or chain-of-thought (repeatable)")
    run.add_argument("--phase", action="append", dest="phases", metavar="P",
                     help="application or tests (repeatable)")
    run.add_argument("--out", required=True, type=Path)
    run.add_argument("--jobs", type=int, default=None, help="cells to run in parallel")

    report = sub.add_parser("report", help="render the report of a finished run")
    report.add_argument("run_dir", type=Path)
    report.add_argument("--format", choices=["json", "markdown"], default="markdown")

    analyze = sub.add_parser("analyze", help="run the static migration analyzer on a tree")
    analyze.add_argument("tree", type=Path)
    analyze.add_argument("--manifest", required=True, type=Path)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "run":
            config = load_config(args.config).with_overrides(
                mode=args.mode, strategies=args.strategies, phases=args.phases, jobs=args.jobs)
            result = run_experiment(config, args.out)
            sys.stdout.write(emit_report(result, "markdown"))
            return 0 if result.completed else 1
        if args.command == "report":
            result = ExperimentReport.from_json((args.run_dir / "report.json").read_text("utf-8"))
            sys.stdout.write(emit_report(result, args.format))
            return 0
        manifest = TargetsManifest.load(args.manifest)
        sys.stdout.write(analyze_tree(args.tree, manifest).to_json())
        return 0
    except (MigrationError, OSError, ValueError) as exc:
        print(f"migrate: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
