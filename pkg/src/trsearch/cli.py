"""Command-line entry point: ``trs run|ablate|compare|mock-eval``.

Exit codes: 0 success, 1 configuration error, 2 runtime or evaluator failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from typing import Optional, Sequence

from trsearch import __version__
from trsearch.core import ConfigError, ObjectiveError
from trsearch.harness.ablation import run_ablation
from trsearch.harness.compare import compare
from trsearch.harness.config import ABLATION_KINDS, ExperimentConfig, load_config

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_RUNTIME = 2

log = logging.getLogger("trsearch")


def _add_overrides(p: argparse.ArgumentParser) -> None:
    p.add_argument("config", help="experiment TOML file")
    p.add_argument("--seed", type=int, help="run only this seed")
    p.add_argument("--output-dir", help="write artifacts here instead of the configured directory")
    p.add_argument("--jobs", type=int, help="number of worker processes")
    p.add_argument("--evaluator", metavar="COMMAND", help="evaluate through an external protocol process")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        # usage errors are configuration errors, not runtime failures
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="trs", description="Trust-region black-box search benchmarks.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run every optimizer x budget x seed cell of a config")
    _add_overrides(run)

    ablate = sub.add_parser("ablate", help="sweep one TRS setting around a config")
    ablate.add_argument("kind", choices=ABLATION_KINDS)
    _add_overrides(ablate)

    cmp_ = sub.add_parser("compare", help="tabulate report.json files or result directories")
    cmp_.add_argument("reports", nargs="+")

    mock = sub.add_parser("mock-eval", help="serve a reference evaluator on stdin/stdout", add_help=False)
    mock.add_argument("mock_args", nargs=argparse.REMAINDER)
    return parser


def _config(args) -> ExperimentConfig:
    if args.jobs is not None and args.jobs < 1:
        raise ConfigError("--jobs must be at least 1")
    cfg = load_config(args.config)
    return cfg.with_overrides(seed=args.seed, output_dir=args.output_dir, jobs=args.jobs, evaluator=args.evaluator)


def _run(args) -> int:
    from trsearch.harness.experiment import run_experiment

    result = run_experiment(_config(args))
    n, bad = len(result.results), len(result.failures)
    print(f"{n - bad}/{n} runs succeeded; artifacts in {result.output_dir}")
    return EXIT_RUNTIME if bad else EXIT_OK


def _ablate(args) -> int:
    result = run_ablation(args.kind, _config(args))
    print(f"{args.kind}: wrote {len(result.rows)} rows to {result.output_dir}")
    return EXIT_RUNTIME if result.failures else EXIT_OK


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    if argv[:1] == ["mock-eval"]:
        from trsearch.mock_eval import main as mock_main

        return mock_main(argv[1:])
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2),
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        if args.command == "run":
            return _run(args)
        if args.command == "ablate":
            return _ablate(args)
        if args.command == "compare":
            compare(args.reports, out=sys.stdout)
            return EXIT_OK
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ObjectiveError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    parser.error(f"unknown command {args.command!r}")
    return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
