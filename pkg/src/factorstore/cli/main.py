"""CLI main entry point."""

import argparse
import logging
import sys
from pathlib import Path
from typing import Callable
from typing import Dict
from typing import List
from typing import Optional

import pandas as pd
from pydantic import ValidationError
from rich.console import Console

from factorstore._version import __version__
from factorstore.bench.harness import run_benchmark
from factorstore.bench.models import BenchConfig
from factorstore.cache.manager import CacheManager
from factorstore.core.exceptions import FactorStoreError
from factorstore.core.log_setup import setup_logging
from factorstore.core.models import BuildConfig
from factorstore.core.models import QuerySpec
from factorstore.core.settings import Settings
from factorstore.data.ingest import ingest_csv
from factorstore.data.store import FeatureStore
from factorstore.dataset.builder import DatasetBuilder
from factorstore.hte.sampler import sample_prior
from factorstore.hte.sampler import sample_reweighted
from factorstore.hte.space import ReweightSpec
from factorstore.hte.space import parse_assignments
from factorstore.hte.space import parse_space_file
from factorstore.hte.space import parse_widths
from factorstore.ui.reporter import Reporter
from factorstore.ui.tables import TableViews
from factorstore.utils.time_utils import parse_date


logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_USAGE = 2


def create_parser() -> argparse.ArgumentParser:
    """
    Create argument parser.

    Returns:
        Configured ArgumentParser
    """
    parser = argparse.ArgumentParser(
        prog="factorstore",
        description="factorstore - flat-file factor store and expression caches",
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )

    # Store options
    parser.add_argument(
        "--root",
        type=Path,
        help="Store root directory (default: $FACTORSTORE_ROOT or ~/.factorstore)",
    )

    # Logging options
    parser.add_argument(
        "--log-level",
        type=str,
        choices=["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"],
        help="Logging level (default: WARNING)",
    )
    parser.add_argument(
        "--log-file",
        type=str,
        help="Log file path",
    )
    parser.add_argument(
        "--debug",
        action="store_true",
        help="Enable debug mode",
    )
    parser.add_argument(
        "-v",
        "--version",
        action="version",
        version=f"factorstore v{__version__}",
    )

    commands = parser.add_subparsers(dest="command", metavar="COMMAND")
    commands.required = True

    init = commands.add_parser(
        "init", help="Create the store layout and write the calendar"
    )
    init.add_argument(
        "--calendar", type=Path, required=True, help="File with one ISO date per line"
    )

    dump = commands.add_parser(
        "dump", help="Ingest a CSV of symbol,date,attribute... rows"
    )
    dump.add_argument("csv", type=Path, help="CSV file")

    append = commands.add_parser(
        "append", help="Like dump, but reject any overlap with history"
    )
    append.add_argument("csv", type=Path, help="CSV file")

    query = commands.add_parser("query", help="Build an aligned frame")
    scope = query.add_mutually_exclusive_group(required=True)
    scope.add_argument("--pool", type=str, help="Instrument pool name")
    scope.add_argument("--instruments", type=str, help="Comma-separated symbols")
    query.add_argument(
        "--fields", type=str, required=True, help='Expressions separated by ";"'
    )
    query.add_argument("--start", type=str, help="First date (default: calendar start)")
    query.add_argument("--end", type=str, help="Last date (default: calendar end)")
    query.add_argument("--workers", type=int, help="Parallel instrument tasks")
    query.add_argument(
        "--no-expr-cache", action="store_true", help="Disable expression cache"
    )
    query.add_argument(
        "--no-dataset-cache", action="store_true", help="Disable dataset cache"
    )
    query.add_argument(
        "--format",
        type=str,
        default="csv",
        choices=["csv", "frame", "table"],
        help="Output format (default: csv)",
    )
    query.add_argument(
        "--output",
        type=Path,
        help="Output file (csv) or prefix (frame); default stdout",
    )

    cache = commands.add_parser("cache", help="List or clear the disk caches")
    cache.add_argument("action", choices=["list", "clear"])
    which = cache.add_mutually_exclusive_group()
    which.add_argument("--expr", action="store_true", help="Expression cache only")
    which.add_argument("--dataset", action="store_true", help="Dataset cache only")

    bench = commands.add_parser("bench", help="Run the staged cache benchmark")
    bench.add_argument("--instruments", type=int, default=100)
    bench.add_argument("--days", type=int, default=2500)
    bench.add_argument("--pool-size", type=int, default=80)
    bench.add_argument(
        "--workers", type=str, default="1", help="Worker counts, e.g. 1,4"
    )
    bench.add_argument("--seed", type=int, default=0)
    bench.add_argument("--repeat", type=int, default=3)
    bench.add_argument(
        "--root",
        dest="bench_root",
        type=Path,
        help="Synthetic store directory (default: temporary, removed afterwards)",
    )
    bench.add_argument("--out", type=Path, help="Write the report CSV here")

    hte = commands.add_parser(
        "hte-sample", help="Sample hyperparameters from a search space"
    )
    hte.add_argument("space", type=Path, help="Space description file")
    hte.add_argument(
        "--theta-prev", type=str, help="Previous best, e.g. lr=0.01,layers=2"
    )
    hte.add_argument("--sigma", type=str, default="", help="Kernel widths, e.g. lr=0.5")
    hte.add_argument("--n", type=int, default=10)
    hte.add_argument("--seed", type=int)

    return parser


def load_settings(args: argparse.Namespace) -> Settings:
    """Settings with command-line flags taking precedence over every other source."""
    overrides: Dict[str, object] = {}
    if args.root is not None:
        overrides["root"] = args.root
    if args.log_level is not None:
        overrides["log_level"] = args.log_level
    if args.log_file is not None:
        overrides["log_file"] = args.log_file
    if args.debug:
        overrides["debug"] = True
    return Settings(**overrides)


def read_calendar_file(path: Path) -> List:
    """Dates from a one-column file; a leading ``date`` header is allowed."""
    frame = pd.read_csv(path, header=None, names=["date"], dtype=str, comment="#")
    column = frame["date"]
    values = [v.strip() for v in column.dropna() if v.strip()]
    if values and values[0].lower() == "date":
        values = values[1:]
    return [parse_date(v) for v in values]


def cmd_init(args: argparse.Namespace, settings: Settings, reporter: Reporter) -> int:
    store = FeatureStore(settings.root, settings.frequency)
    dates = read_calendar_file(args.calendar)
    store.init_layout()
    if store.write_calendar(settings.frequency, dates):
        reporter.display_success(f"Calendar {settings.frequency}: {len(dates)} dates")
    else:
        reporter.display_info("Calendar unchanged")
    return EXIT_OK


def cmd_dump(args: argparse.Namespace, settings: Settings, reporter: Reporter) -> int:
    store = FeatureStore(settings.root, settings.frequency)
    plan = ingest_csv(store, args.csv, append_only=args.command == "append")
    reporter.display_success(
        f"{plan.rows} rows -> {plan.series_count} series writes "
        f"({len(plan.spans)} instruments)"
    )
    return EXIT_OK


def build_query(args: argparse.Namespace, settings: Settings) -> QuerySpec:
    store = FeatureStore(settings.root, settings.frequency)
    start = parse_date(args.start) if args.start else None
    end = parse_date(args.end) if args.end else None
    if start is None or end is None:
        calendar = store.read_calendar()
        start = start or calendar.timestamps[0]
        end = end or calendar.timestamps[-1]
    fields = [f.strip() for f in args.fields.split(";") if f.strip()]
    instruments = args.instruments.split(",") if args.instruments else None
    return QuerySpec(
        pool=args.pool,
        instruments=instruments,
        expressions=fields,
        start=start,
        end=end,
        frequency=settings.frequency,
    )


def cmd_query(args: argparse.Namespace, settings: Settings, reporter: Reporter) -> int:
    spec = build_query(args, settings)
    config = BuildConfig(
        use_expr_cache=settings.use_expr_cache and not args.no_expr_cache,
        use_dataset_cache=settings.use_dataset_cache and not args.no_dataset_cache,
        workers=args.workers or settings.workers,
        memo_capacity=settings.memo_capacity,
    )
    frame, _ = DatasetBuilder.from_settings(settings, config).build(spec)

    if args.format == "frame":
        if args.output is None:
            raise ValueError("--format frame needs --output PREFIX")
        frame.write_frame(args.output)
        reporter.display_success(f"Wrote {len(frame)} rows to {args.output}.frame")
    elif args.format == "table":
        Reporter().display_table(TableViews().create_frame_preview(frame))
    elif args.output is not None:
        frame.to_csv(args.output)
        reporter.display_success(f"Wrote {len(frame)} rows to {args.output}")
    else:
        sys.stdout.write(frame.to_csv())
    return EXIT_OK


def cmd_cache(args: argparse.Namespace, settings: Settings, reporter: Reporter) -> int:
    manager = CacheManager(settings.cache_dir)
    kind = "expr" if args.expr else "dataset" if args.dataset else None
    if args.action == "list":
        table = TableViews().create_cache_table(manager.list_entries(kind))
        Reporter().display_table(table)
    else:
        removed = manager.clear(kind)
        reporter.display_success(f"Removed {removed} cache entries")
    return EXIT_OK


def parse_workers(text: str) -> List[int]:
    try:
        return [int(w) for w in text.split(",") if w.strip()]
    except ValueError:
        raise ValueError(f"invalid worker list {text!r}") from None


def cmd_bench(args: argparse.Namespace, settings: Settings, reporter: Reporter) -> int:
    config = BenchConfig(
        instruments=args.instruments,
        days=args.days,
        pool_size=args.pool_size,
        workers=parse_workers(args.workers),
        seed=args.seed,
        repeat=args.repeat,
    )
    report = run_benchmark(config, args.bench_root)
    Reporter().display_table(TableViews().create_bench_table(report))
    reporter.display_info(
        f"Store {report.store_bytes:,} B / raw payload {report.raw_payload_bytes:,} B "
        f"= {report.compactness:.4f}"
    )
    if args.out is not None:
        report.to_csv(args.out)
        reporter.display_success(f"Report written to {args.out}")
    return EXIT_OK


def format_assignment(assignment: Dict[str, object]) -> str:
    return ",".join(f"{name}={value}" for name, value in assignment.items())


def cmd_hte_sample(
    args: argparse.Namespace, settings: Settings, reporter: Reporter
) -> int:
    space = parse_space_file(args.space.read_text(encoding="utf-8"))
    if args.theta_prev:
        reweight = ReweightSpec(
            theta_prev=parse_assignments(args.theta_prev, space),
            sigma=parse_widths(args.sigma),
        )
        samples = sample_reweighted(space, reweight, args.n, args.seed)
    else:
        samples = sample_prior(space, args.n, args.seed)
    sys.stdout.write("".join(format_assignment(s) + "\n" for s in samples))
    return EXIT_OK


COMMANDS: Dict[str, Callable[[argparse.Namespace, Settings, Reporter], int]] = {
    "init": cmd_init,
    "dump": cmd_dump,
    "append": cmd_dump,
    "query": cmd_query,
    "cache": cmd_cache,
    "bench": cmd_bench,
    "hte-sample": cmd_hte_sample,
}


def run_command(args: argparse.Namespace) -> int:
    """
    Run one parsed command.

    Args:
        args: Parsed arguments

    Returns:
        Exit code: 0 success, 1 data/environment error, 2 usage/parse error
    """
    reporter = Reporter(Console(stderr=True))
    try:
        settings = load_settings(args)
        setup_logging(settings.log_level, settings.log_file, settings.debug)
        return COMMANDS[args.command](args, settings, reporter)
    except FactorStoreError as e:
        logger.debug("command failed", exc_info=True)
        reporter.display_error(f"{type(e).__name__}: {e}")
        return e.exit_code
    except ValidationError as e:
        reporter.display_error(f"Invalid arguments: {e}")
        return EXIT_USAGE
    except ValueError as e:
        reporter.display_error(str(e))
        return EXIT_USAGE
    except Exception as e:
        reporter.display_error(f"Unexpected error: {str(e)}")
        if args.debug:
            import traceback

            traceback.print_exc()
        return EXIT_ERROR


def main(argv: Optional[List[str]] = None) -> int:
    """
    Main entry point.

    Returns:
        Exit code
    """
    parser = create_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else EXIT_USAGE
    return run_command(args)


if __name__ == "__main__":
    sys.exit(main())
