"""
Staged benchmark over cache configurations and worker counts.

For each worker count the harness runs, in order:

- ``-E -D``: no caches
- ``+E -D cold``: expression cache cleared before every repetition
- ``+E -D warm``: expression cache left from the cold runs
- ``+E +D warm``: both caches, after one unreported priming build

Every build's frame digest must match the first one; a mismatch aborts the run.
"""

import logging
import tempfile
from pathlib import Path
from typing import Dict
from typing import List
from typing import Optional

from factorstore.bench.models import CELL_LABELS
from factorstore.bench.models import POOL_NAME
from factorstore.bench.models import BenchCell
from factorstore.bench.models import BenchConfig
from factorstore.bench.models import BenchReport
from factorstore.bench.synthetic import generate_synthetic
from factorstore.bench.synthetic import raw_payload_bytes
from factorstore.cache.manager import CacheManager
from factorstore.core.exceptions import DigestMismatch
from factorstore.core.models import STAGES
from factorstore.core.models import BuildConfig
from factorstore.core.models import EvalStats
from factorstore.core.models import QuerySpec
from factorstore.core.models import StageTimings
from factorstore.data.store import FeatureStore
from factorstore.dataset.builder import DatasetBuilder
from factorstore.dataset.frame import AlignedFrame
from factorstore.utils.time_utils import mean_std


logger = logging.getLogger(__name__)

CELL_SWITCHES = {
    "-E -D": (False, False),
    "+E -D cold": (True, False),
    "+E -D warm": (True, False),
    "+E +D warm": (True, True),
}


class _DigestGate:
    """Holds the first frame built and checks every later one against it."""

    def __init__(self):
        self.reference: Optional[AlignedFrame] = None
        self.digest: Optional[str] = None

    def check(self, frame: AlignedFrame, label: str, workers: int) -> str:
        digest = frame.digest()
        if self.reference is None:
            self.reference, self.digest = frame, digest
        elif digest != self.digest:
            raise DigestMismatch(
                f"[{label}, workers={workers}] digest {digest} != {self.digest}",
                self.reference.first_difference(frame),
            )
        return digest


def _summarize(
    label: str, workers: int, runs: List[StageTimings], digest: str, stats: EvalStats
) -> BenchCell:
    means: Dict[str, float] = {}
    stds: Dict[str, float] = {}
    for stage in (*STAGES, "total"):
        means[stage], stds[stage] = mean_std([getattr(t, stage) for t in runs])
    return BenchCell(
        label=label,
        workers=workers,
        mean=StageTimings(**means),
        std=StageTimings(**stds),
        digest=digest,
        stats=stats,
    )


def bench_query(config: BenchConfig, store: FeatureStore) -> QuerySpec:
    """The query every cell builds: all expressions over the whole calendar."""
    calendar = store.read_calendar()
    return QuerySpec(
        pool=POOL_NAME,
        expressions=config.expressions,
        start=calendar.timestamps[0],
        end=calendar.timestamps[-1],
    )


def run_cells(config: BenchConfig, root: Path) -> BenchReport:
    """Run the full matrix against an already generated store."""
    store = FeatureStore(root)
    spec = bench_query(config, store)
    manager = CacheManager(root / "cache")
    gate = _DigestGate()
    report = BenchReport(
        config=config,
        store_bytes=store.feature_bytes(),
        raw_payload_bytes=raw_payload_bytes(config),
    )

    for workers in config.workers:
        manager.clear()
        for label in CELL_LABELS:
            use_expr, use_dataset = CELL_SWITCHES[label]
            build_config = BuildConfig(
                use_expr_cache=use_expr, use_dataset_cache=use_dataset, workers=workers
            )
            builder = DatasetBuilder(root, build_config)
            if label == "+E +D warm":
                frame, _ = builder.build(spec)
                gate.check(frame, f"{label} priming", workers)

            runs: List[StageTimings] = []
            digest = ""
            for _ in range(config.repeat):
                if label in ("-E -D", "+E -D cold"):
                    manager.clear()
                frame, timings = builder.build(spec)
                digest = gate.check(frame, label, workers)
                runs.append(timings)

            cell = _summarize(label, workers, runs, digest, builder.stats.model_copy())
            report.cells.append(cell)
            logger.info(
                f"[{label}, workers={workers}] total {cell.mean.total:.3f}s "
                f"+/- {cell.std.total:.3f}s"
            )
    return report


def run_benchmark(
    config: Optional[BenchConfig] = None, root: Optional[Path] = None
) -> BenchReport:
    """
    Generate a synthetic store (unless ``root`` already holds one) and run
    every benchmark cell.

    Args:
        config: Benchmark configuration; defaults to the desk-scale setup
        root: Store directory; a temporary directory removed afterwards when None

    Raises:
        DigestMismatch: If any two builds produced different frames
        NonEmptyTarget: If ``root`` is non-empty but holds no store
    """
    config = config or BenchConfig()
    if root is None:
        with tempfile.TemporaryDirectory(prefix="factorstore-bench-") as tmp:
            target = Path(tmp) / "store"
            generate_synthetic(config, target)
            return run_cells(config, target)

    root = Path(root)
    if not FeatureStore(root).calendar_path().exists():
        generate_synthetic(config, root)
    return run_cells(config, root)
