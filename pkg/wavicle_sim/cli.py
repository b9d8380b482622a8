"""Command-line interface for wavicle-sim."""

import argparse
import logging
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from . import __version__
from .config import ExperimentKind, load_config, parse_override
from .errors import ConfigError, WavicleError
from .experiments import oracle_rows, run_experiment
from .physics.sampler import EXCHANGE_KAPPA, SamplingMode
from .physics.wavicle import Statistics
from .selftest import selftest
from .utils.output import FORMATS, result_metadata, write_results

logger = logging.getLogger(__name__)


@dataclass
class CliInvocation:
    subcommand: str
    config_path: Path | None = None
    overrides: dict[str, Any] = field(default_factory=dict)
    output_path: Path | None = None
    format: str = "csv"
    kind: ExperimentKind | None = None
    quiet: bool = False
    verbose: bool = False
    kappa: float = EXCHANGE_KAPPA


class _Parser(argparse.ArgumentParser):
    """ArgumentParser whose usage errors are a single line on stderr."""

    def error(self, message: str):
        self.exit(2, f"{self.prog}: error: {message}\n")


def positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}")
    return value


def seed_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer seed, got {text!r}") from None
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError(f"seed must lie in [0, 2^64), got {text!r}")
    return value


def create_progress_bar(current: int, total: int, width: int = 40) -> str:
    """Create a text-based progress bar."""
    percentage = current / total if total > 0 else 0
    filled = int(width * percentage)
    bar = "=" * filled + "-" * (width - filled)
    return f"[{bar}] {current}/{total} chunks ({percentage * 100:.1f}%)"


def _add_verbosity(parser: argparse.ArgumentParser) -> None:
    group = parser.add_mutually_exclusive_group()
    group.add_argument("-q", "--quiet", action="store_true", help="Suppress progress and summary output")
    group.add_argument("--verbose", action="store_true", help="Debug logging")


def _add_config_options(parser: argparse.ArgumentParser, simulate: bool) -> None:
    parser.add_argument("-c", "--config", type=Path, default=None, help="Flat JSON config file")
    parser.add_argument(
        "--set",
        dest="assignments",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="Override one config key; VALUE is parsed as JSON. Repeatable",
    )
    parser.add_argument("--stats", choices=[s.value for s in Statistics], help="Particle statistics")
    parser.add_argument("-o", "--out", type=Path, default=None, help="Output file. Default: <subcommand>.<format>")
    parser.add_argument("-f", "--format", choices=FORMATS, default=None, help="Output format. Default: from --out suffix, else csv")
    if simulate:
        parser.add_argument("-n", "--trials", type=positive_int, help="Trials per scan point")
        parser.add_argument("-s", "--seed", type=seed_int, help="Random seed (default: $WAVICLE_SEED)")
        parser.add_argument("-m", "--mode", choices=[m.value for m in SamplingMode], help="Exchange-reading sampling mode")
        parser.add_argument("-w", "--workers", type=positive_int, help="Worker threads")
        parser.add_argument("--kappa", type=float, default=EXCHANGE_KAPPA, help=argparse.SUPPRESS)
    _add_verbosity(parser)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="wavicle-sim",
        description="Monte Carlo wavicle simulation of two-source detector correlations, checked against closed-form values.",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  EPR-Bohm scan, one million trials per point:
    python -m wavicle_sim epr --trials 1000000 --seed 42

  Fermion HBT curve to csv:
    python -m wavicle_sim hbt --stats fermion --out hbt.csv

  Analytic values only:
    python -m wavicle_sim oracle-table --kind hbt --out hbt_oracle.json

  Health check:
    python -m wavicle_sim selftest
""",
    )
    parser.add_argument("-V", "--version", action="version", version=f"%(prog)s {__version__}")
    subparsers = parser.add_subparsers(dest="subcommand", metavar="SUBCOMMAND", required=True)

    descriptions = {
        "epr": "Spin correlation of up/down sources over direction pairs",
        "hbt": "Intensity correlation versus detector separation",
        "spinflow": "+1/-1 split and mean of a polarised spin flow",
        "noise": "Exchange-channel noise under separate versus joint averaging",
    }
    for name, help_text in descriptions.items():
        _add_config_options(subparsers.add_parser(name, help=help_text, description=help_text), simulate=True)

    table = subparsers.add_parser("oracle-table", help="Analytic values for a scan, no simulation")
    table.add_argument("-k", "--kind", choices=[k.value for k in ExperimentKind], default=ExperimentKind.EPR.value)
    _add_config_options(table, simulate=False)

    check = subparsers.add_parser("selftest", help="Oracle identities plus a short smoke simulation")
    check.add_argument("-s", "--seed", type=seed_int, help="Random seed (default: $WAVICLE_SEED)")
    check.add_argument("--kappa", type=float, default=EXCHANGE_KAPPA, help=argparse.SUPPRESS)
    _add_verbosity(check)
    return parser


def _infer_format(explicit: str | None, out: Path | None) -> str:
    if explicit:
        return explicit
    if out is not None and out.suffix.lstrip(".").lower() in FORMATS:
        return out.suffix.lstrip(".").lower()
    return "csv"


def parse_invocation(argv: list[str]) -> CliInvocation:
    """Parse argv; usage errors exit with status 2 and a one-line diagnostic."""
    parser = build_parser()
    args = parser.parse_args(argv)
    invocation = CliInvocation(
        subcommand=args.subcommand,
        quiet=args.quiet,
        verbose=args.verbose,
        kappa=getattr(args, "kappa", EXCHANGE_KAPPA),
    )
    if args.subcommand == "selftest":
        if args.seed is not None:
            invocation.overrides["seed"] = args.seed
        return invocation

    overrides: dict[str, Any] = {}
    try:
        for item in args.assignments:
            key, value = parse_override(item)
            overrides[key] = value
    except ConfigError as e:
        parser.error(str(e))

    flags = {
        "trials": getattr(args, "trials", None),
        "seed": getattr(args, "seed", None),
        "statistics": args.stats,
        "sampling_mode": getattr(args, "mode", None),
        "workers": getattr(args, "workers", None),
    }
    overrides.update({key: value for key, value in flags.items() if value is not None})

    invocation.config_path = args.config
    invocation.overrides = overrides
    invocation.format = _infer_format(args.format, args.out)
    invocation.kind = ExperimentKind(args.kind if args.subcommand == "oracle-table" else args.subcommand)
    invocation.output_path = args.out or Path(f"{args.subcommand}.{invocation.format}")
    return invocation


def _configure_logging(invocation: CliInvocation) -> None:
    level = logging.DEBUG if invocation.verbose else logging.WARNING if invocation.quiet else logging.INFO
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr, force=True)


def _run_selftest(invocation: CliInvocation) -> int:
    seed = load_config(overrides=invocation.overrides).seed
    start_time = time.time()
    code, results = selftest(seed=seed, kappa=invocation.kappa)
    elapsed = time.time() - start_time

    if not invocation.quiet:
        print(f"Selftest (seed {seed})")
        for result in results:
            print(f"  {'PASS' if result.passed else 'FAIL'}  {result.name:<24} {result.detail}")
        print(f"  Time elapsed: {elapsed:.2f}s")
    failed = [result.name for result in results if not result.passed]
    if failed:
        print(f"selftest failed: {', '.join(failed)}", file=sys.stderr)
    return code


def _run_scan(invocation: CliInvocation) -> int:
    cfg = load_config(invocation.config_path, invocation.overrides, kind=invocation.kind)

    progress_state = {"last_update": 0.0}

    def progress_callback(current: int, total: int) -> None:
        if invocation.quiet:
            return
        now = time.time()
        if now - progress_state["last_update"] >= 0.1 or current == total:
            progress_state["last_update"] = now
            print(f"\r{create_progress_bar(current, total)}", end="", flush=True)
            if current == total:
                print()

    if invocation.subcommand == "oracle-table":
        rows = oracle_rows(cfg)
        elapsed = 0.0
    else:
        if not invocation.quiet:
            print(f"Running {cfg.kind.value} scan: {cfg.statistics.value}, {cfg.trials} trials per point")
            print(f"Seed: {cfg.seed}, Workers: {cfg.workers}, Mode: {cfg.sampling_mode.value}")
            print()
        start_time = time.time()
        if invocation.kappa != EXCHANGE_KAPPA:
            logger.warning("exchange readings scaled by %r instead of %r", invocation.kappa, EXCHANGE_KAPPA)
        rows = run_experiment(cfg, progress_callback, kappa=invocation.kappa)
        elapsed = time.time() - start_time

    path = write_results(rows, invocation.format, invocation.output_path, result_metadata(cfg))

    if not invocation.quiet:
        z_scores = [row.z_score for row in rows if row.z_score is not None]
        print()
        print("Scan complete!" if invocation.subcommand != "oracle-table" else "Oracle table written!")
        print(f"  Scan points: {len(rows)}")
        if z_scores:
            print(f"  Max z-score: {max(z_scores):.3f}")
            print(f"  Points beyond 4 sigma: {sum(z > 4.0 for z in z_scores)}")
        if elapsed > 0:
            print(f"  Time elapsed: {elapsed:.2f}s")
            print(f"  Rate: {len(rows) * cfg.trials / elapsed:,.0f} trials/sec")
        print(f"  Output: {path} ({invocation.format})")
    return 0


def main(argv: list[str] | None = None) -> int:
    """Main entry point for CLI."""
    invocation = parse_invocation(sys.argv[1:] if argv is None else argv)
    _configure_logging(invocation)
    try:
        if invocation.subcommand == "selftest":
            return _run_selftest(invocation)
        return _run_scan(invocation)
    except WavicleError as e:
        print(f"Error: {e}", file=sys.stderr)
        return e.exit_code


if __name__ == "__main__":
    sys.exit(main())
