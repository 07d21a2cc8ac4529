"""Tests for the staged cache benchmark."""

import io

import pandas as pd
import pytest

from factorstore.bench import BenchConfig
from factorstore.bench import run_benchmark
from factorstore.bench.harness import _DigestGate
from factorstore.bench.models import CELL_LABELS
from factorstore.core.exceptions import DigestMismatch
from factorstore.core.models import STAGES
from factorstore.core.models import QuerySpec
from factorstore.dataset import DatasetBuilder


class TestRunBenchmark:
    """Test the benchmark matrix on a tiny universe."""

    @pytest.fixture
    def report(self, tmp_path, tiny_bench_config):
        return run_benchmark(tiny_bench_config, tmp_path / "bench")

    def test_every_cell_runs(self, report):
        """One cell per configuration label, all with one digest."""
        assert [c.label for c in report.cells] == list(CELL_LABELS)
        assert report.digests_equal
        assert all(c.std.total == 0.0 for c in report.cells)

    def test_warm_cells_skip_work(self, report):
        """Warm caches replace evaluation."""
        assert report.cell("-E -D").stats.node_evaluations > 0
        assert report.cell("+E -D cold").stats.expr_cache_misses > 0
        warm_expr = report.cell("+E -D warm").stats
        assert warm_expr.expr_cache_misses == 0 and warm_expr.node_evaluations == 0
        warm_both = report.cell("+E +D warm").stats
        assert warm_both.dataset_cache_hits == 1 and warm_both.raw_reads == 0

    def test_csv_report(self, report):
        """The report has one row per cell and stage."""
        frame = pd.read_csv(io.StringIO(report.to_csv()))
        assert list(frame.columns) == ["config", "workers", "stage", "mean_s", "std_s"]
        assert len(frame) == len(CELL_LABELS) * (len(STAGES) + 1)
        assert (frame["mean_s"] >= 0).all()
        assert set(frame["stage"]) == {*STAGES, "total"}

    def test_csv_to_file(self, report, tmp_path):
        """Writing to a path returns nothing and leaves the CSV on disk."""
        path = tmp_path / "report.csv"
        assert report.to_csv(path) is None
        assert path.read_text(encoding="utf-8").startswith("config,workers,stage,")

    def test_compactness(self, report):
        """The store is barely larger than its raw values."""
        assert 1.0 <= report.compactness < 1.2

    def test_unknown_cell(self, report):
        """Missing cells raise KeyError."""
        with pytest.raises(KeyError):
            report.cell("-E -D", workers=8)

    def test_existing_store_is_reused(self, tmp_path, tiny_bench_config):
        """A second run over the same root reuses the generated store."""
        root = tmp_path / "bench"
        first = run_benchmark(tiny_bench_config, root)
        second = run_benchmark(tiny_bench_config, root)
        assert first.cells[0].digest == second.cells[0].digest

    def test_temporary_root(self, tiny_bench_config):
        """Without a root the run uses a throwaway directory."""
        assert run_benchmark(tiny_bench_config).digests_equal

    def test_worker_counts_agree(self, tmp_path, tiny_bench_config):
        """Parallel builds reproduce the single-worker digest."""
        config = tiny_bench_config.model_copy(update={"workers": [1, 2]})
        report = run_benchmark(config, tmp_path / "bench")
        assert len(report.cells) == 2 * len(CELL_LABELS)
        assert report.digests_equal
        assert report.cell("+E +D warm", workers=2).digest == report.cells[0].digest


class TestDigestGate:
    """Test frame comparison between cells."""

    def test_mismatch_names_first_row(self, store, dates):
        """A differing frame aborts with its first differing row."""
        builder = DatasetBuilder(store.root)
        spec = QuerySpec(
            pool="small", expressions=["$close"], start=dates[0], end=dates[-1]
        )
        frame, _ = builder.build(spec)
        other, _ = builder.build(spec.model_copy(update={"expressions": ["$open"]}))

        gate = _DigestGate()
        assert gate.check(frame, "-E -D", 1) == frame.digest()
        with pytest.raises(DigestMismatch) as exc_info:
            gate.check(other, "+E -D cold", 1)
        assert exc_info.value.first_difference
        assert "AAA" in str(exc_info.value)


@pytest.mark.integration
@pytest.mark.slow
class TestDirectional:
    """Warm caches are faster than no caches on a modest universe."""

    def test_warm_dataset_cache_beats_uncached(self, tmp_path):
        """The fully warm configuration has the lowest mean total."""
        config = BenchConfig(instruments=40, days=800, pool_size=30, repeat=3)
        report = run_benchmark(config, tmp_path / "bench")

        uncached = report.cell("-E -D").mean.total
        assert report.cell("+E +D warm").mean.total < uncached
        assert report.cell("+E -D warm").mean.total < uncached


@pytest.mark.integration
@pytest.mark.slow
class TestSpeedupFloors:
    """Test cache and worker speedups on the default universe."""

    @pytest.fixture(scope="class")
    def report(self, tmp_path_factory):
        config = BenchConfig(workers=[1, 4])
        return run_benchmark(config, tmp_path_factory.mktemp("floors"))

    def test_expression_cache_halves_compute(self, report):
        """Warm expression caches need at most half the uncached compute time."""
        uncached = report.cell("-E -D").mean.compute
        assert report.cell("+E -D warm").mean.compute <= 0.5 * uncached

    def test_dataset_cache_cuts_total_to_a_third(self, report):
        """A warm dataset cache needs at most a third of the uncached total."""
        uncached = report.cell("-E -D").mean.total
        assert report.cell("+E +D warm").mean.total <= uncached / 3

    def test_four_workers_reproduce_one(self, report):
        """Every cell at four workers has the single-worker digest."""
        assert report.digests_equal
        for label in CELL_LABELS:
            assert report.cell(label, workers=4).digest == report.cell(label).digest

    def test_four_workers_cut_compute(self, report):
        """Four workers need at most 70% of the single-worker compute time."""
        single = report.cell("-E -D").mean.compute
        assert report.cell("-E -D", workers=4).mean.compute <= 0.7 * single

    def test_store_is_compact(self, report):
        """Series files add at most 10% to the raw values."""
        assert report.compactness <= 1.10
