"""Table views for benchmark reports, cache listings and frame previews."""

from typing import List

import numpy as np
from rich.table import Table

from factorstore.bench.models import BenchReport
from factorstore.cache.manager import CacheEntryInfo
from factorstore.core.models import STAGES
from factorstore.dataset.frame import AlignedFrame
from factorstore.utils.time_utils import format_datetime


STAGE_TITLES = {
    "load": "Load Data",
    "compute": "Compute Expr.",
    "convert_index": "Convert Index",
    "filter_pool": "Filter Data",
    "combine": "Combine Data",
    "total": "Total",
}


def _size(num_bytes: int) -> str:
    if num_bytes < 1024:
        return f"{num_bytes} B"
    if num_bytes < 1024 * 1024:
        return f"{num_bytes / 1024:.1f} KB"
    return f"{num_bytes / (1024 * 1024):.1f} MB"


class TableViews:
    """Table view components for the command-line reports."""

    def create_bench_table(self, report: BenchReport) -> Table:
        """Stage timings, one column per (configuration, worker count) cell.

        Args:
            report: Finished benchmark report

        Returns:
            Table with ``mean±std`` seconds per stage
        """
        config = report.config
        title = (
            f"Stage timings (s) - {config.instruments} instruments x "
            f"{config.days} days, "
            f"{len(config.expressions)} expressions, {config.repeat} runs"
        )
        table = Table(title=title, show_header=True, header_style="bold cyan")
        table.add_column("Stage", style="cyan", no_wrap=True)
        multi = len(config.workers) > 1
        for cell in report.cells:
            header = f"{cell.label}\n{cell.workers} workers" if multi else cell.label
            table.add_column(header, style="green", justify="right")

        for stage in (*STAGES, "total"):
            row = [STAGE_TITLES[stage]]
            for cell in report.cells:
                mean, std = getattr(cell.mean, stage), getattr(cell.std, stage)
                row.append(f"{mean:.3f}±{std:.3f}")
            table.add_row(*row, style="bold" if stage == "total" else None)

        table.add_row("", *[""] * len(report.cells))
        table.add_row(
            "Node evals", *[f"{cell.stats.node_evaluations:,}" for cell in report.cells]
        )
        return table

    def create_cache_table(self, entries: List[CacheEntryInfo]) -> Table:
        """Cache entries with covered range, version and size."""
        table = Table(title="Disk cache", show_header=True, header_style="bold cyan")
        table.add_column("Kind", style="cyan", no_wrap=True)
        table.add_column("Key", style="white", overflow="fold")
        table.add_column("Covered", style="green", justify="right")
        table.add_column("Version", justify="right")
        table.add_column("Last visit", style="dim")
        table.add_column("Size", style="yellow", justify="right")

        for entry in entries:
            table.add_row(
                entry.kind,
                entry.key,
                f"[{entry.first}, {entry.last}]",
                str(entry.version),
                format_datetime(entry.last_visit),
                _size(entry.size_bytes),
            )
        if not entries:
            table.add_row("-", "no entries", "", "", "", "")
        return table

    def create_frame_preview(self, frame: AlignedFrame, max_rows: int = 20) -> Table:
        """First rows of an aligned frame."""
        title = f"{len(frame)} rows x {len(frame.columns)} columns"
        table = Table(title=title, show_header=True, header_style="bold cyan")
        table.add_column("instrument", style="cyan", no_wrap=True)
        table.add_column("datetime", no_wrap=True)
        for column in frame.columns:
            table.add_column(column, justify="right", overflow="fold")

        for r in range(min(len(frame), max_rows)):
            cells = [
                "" if np.isnan(v) else f"{v:.6g}" for v in frame.values[r].tolist()
            ]
            table.add_row(str(frame.instruments[r]), str(frame.dates[r]), *cells)
        if len(frame) > max_rows:
            table.add_row("...", "", *[""] * len(frame.columns))
        return table
