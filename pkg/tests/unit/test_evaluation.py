"""Unit tests for the exact oracle, accuracy reports and experiment runner."""

import numpy as np
import pytest

from src.uddpy.evaluation import (
    AccuracyReport,
    TimingStats,
    error_profile,
    exact_quantile,
    exact_quantiles,
    q0_accuracy,
    quantile_grid,
    run_deletion_check,
    run_experiment,
    run_sweep,
)
from src.uddpy.exceptions import ConsistencyError, ParameterError
from src.uddpy.generators import StreamSpec
from src.uddpy.mapping import alpha_from_gamma, gamma_for_epoch
from src.uddpy.reduction import ReductionPlan, build_sketch
from src.uddpy.sketch import CollapsePolicy, SketchConfig
from tests.conftest import dataset_values


def report_with_errors(rel_err, alpha_target=0.01, grid=None):
    grid = grid or quantile_grid(len(rel_err))
    return AccuracyReport(
        grid=grid,
        estimates=[1.0] * len(grid),
        exact=[1.0] * len(grid),
        rel_err=rel_err,
        alpha_final=alpha_target,
        alpha_target=alpha_target,
    )


class TestExactQuantile:
    def test_examples(self):
        """Test exact quantiles pick the lower-rank item."""
        data = [5.0, 3.0, 1.0, 4.0, 2.0]
        assert exact_quantile(data, 0.5) == 3.0
        assert exact_quantile(data, 0.0) == 1.0
        assert exact_quantile(data, 1.0) == 5.0
        assert exact_quantile([10.0, 20.0], 0.4) == 10.0

    def test_empty(self):
        """Test an empty dataset raises ParameterError."""
        with pytest.raises(ParameterError):
            exact_quantile([], 0.5)

    def test_vectorised_matches_scalar(self):
        """Test the sorted-array path agrees with the scalar oracle."""
        data = dataset_values("exponential", 999, seed=2)
        grid = quantile_grid(101)
        ordered = np.sort(data)
        assert exact_quantiles(ordered, grid) == [exact_quantile(data, q) for q in grid]

    def test_grid(self):
        """Test the evenly spaced grid includes both ends and needs two points."""
        assert quantile_grid(5) == [0.0, 0.25, 0.5, 0.75, 1.0]
        assert len(quantile_grid(1001)) == 1001
        with pytest.raises(ParameterError):
            quantile_grid(1)


class TestQ0Accuracy:
    """Smallest q from which every grid point is accurate."""

    def test_all_within(self):
        """Test a fully accurate profile reports zero."""
        assert q0_accuracy(report_with_errors([0.001] * 5)) == 0.0

    def test_low_quantiles_fail(self):
        """Test failures at the low end move the threshold up."""
        report = report_with_errors([0.5, 0.2, 0.001, 0.001, 0.001])
        assert q0_accuracy(report) == 0.5

    def test_isolated_failure_counts(self):
        """Test a single failure in the middle still moves the threshold past it."""
        report = report_with_errors([0.001, 0.001, 0.001, 0.2, 0.001])
        assert q0_accuracy(report) == 1.0

    def test_top_failure_sentinel(self):
        """Test a failure at q=1 reports one grid step past the end."""
        report = report_with_errors([0.001, 0.001, 0.001, 0.001, 0.2])
        assert q0_accuracy(report) == pytest.approx(1.25)


class TestErrorProfile:
    def test_uniform_sketch_within_final_alpha(self):
        """Test a collapsed uniform sketch stays within the alpha of its final epoch."""
        config = SketchConfig(alpha0=0.001, m=64)
        values = dataset_values("lognormal", 20_000, seed=4)
        sketch = build_sketch(config, values)
        report = error_profile(sketch, values, grid_size=201)
        assert sketch.epoch > 0
        assert report.alpha_final == alpha_from_gamma(gamma_for_epoch(0.001, sketch.epoch))
        assert report.max_rel_err <= report.alpha_final * (1 + 1e-9)
        assert report.violations == 0
        assert report.q0_accuracy == 0.0
        assert report.policy == "uniform"

    def test_no_collapse_within_alpha0(self):
        """Test an uncollapsed sketch stays within alpha0."""
        config = SketchConfig(alpha0=0.01, m=10_000)
        values = dataset_values("uniform", 5000, seed=8)
        report = error_profile(build_sketch(config, values), values, grid_size=1001)
        assert report.max_rel_err <= 0.01 * (1 + 1e-9)

    def test_single_item(self):
        """Test every quantile of a single item is accurate."""
        config = SketchConfig(alpha0=0.01, m=8)
        report = error_profile(build_sketch(config, [42.0]), [42.0], grid_size=11)
        assert all(err <= 0.01 for err in report.rel_err)

    def test_dd_target_is_alpha0(self):
        """Test DD reports judge against alpha0 and flag the folded low quantiles."""
        config = SketchConfig(alpha0=0.001, m=32, policy=CollapsePolicy.COLLAPSE_FIRST)
        values = dataset_values("exponential", 20_000, seed=6)
        report = error_profile(build_sketch(config, values), values, grid_size=101)
        assert report.alpha_target == 0.001
        # the lowest buckets were folded, so low quantiles miss
        assert report.q0_accuracy > 0.0

    def test_mismatched_n(self):
        """Test a dataset of a different size raises ConsistencyError."""
        sketch = build_sketch(SketchConfig(alpha0=0.01, m=8), [1.0, 2.0])
        with pytest.raises(ConsistencyError):
            error_profile(sketch, [1.0, 2.0, 3.0])

    def test_csv_rows_and_summary(self):
        """Test report rows follow the grid and the summary carries its size."""
        sketch = build_sketch(SketchConfig(alpha0=0.01, m=8), [1.0, 2.0, 3.0])
        report = error_profile(sketch, [1.0, 2.0, 3.0], grid_size=3)
        assert [row[0] for row in report.rows()] == [0.0, 0.5, 1.0]
        summary = report.summary()
        assert summary["grid_size"] == 3
        assert summary["n"] == 3


class TestTimingStats:
    def test_statistics(self):
        """Test timing statistics over four samples."""
        stats = TimingStats([1.0, 2.0, 3.0, 4.0])
        assert stats.mean == 2.5
        assert stats.median == 2.5
        assert stats.min == 1.0
        assert stats.max == 4.0
        assert stats.p95 == pytest.approx(3.85)
        assert stats.to_dict()["count"] == 4

    def test_single_and_empty(self):
        """Test timing statistics degrade to zero for tiny sample sets."""
        assert TimingStats([0.5]).std_dev == 0.0
        assert TimingStats([]).mean == 0.0


class TestRunExperiment:
    def test_reduced_equals_sequential(self):
        """Test an eight-leaf experiment matches the sequential sketch and records every phase."""
        spec = StreamSpec("lognormal", (1.0, 1.5), n=20_000, seed=9)
        config = SketchConfig(alpha0=0.001, m=128)
        result = run_experiment(spec, config, ReductionPlan(p=8), grid_size=101, compare_sequential=True)
        assert result.identical_to_sequential is True
        assert result.report.q0_accuracy == 0.0
        assert result.gamma_bound_ok
        summary = result.summary()
        assert summary["identical"] is True
        assert summary["procs"] == 8
        assert summary["data_min"] <= summary["data_max"]
        for phase in ("generate", "build", "reduce", "evaluate", "total"):
            assert phase in summary["timings"]
        assert len(result.leaf_collapses) == 8

    def test_dd_collapses_more(self):
        """Test DD collapses more often and is no more accurate than uniform."""
        spec = StreamSpec("lognormal", (1.0, 1.5), n=20_000, seed=9)
        plan = ReductionPlan(p=4)
        dd = run_experiment(spec, SketchConfig(0.001, 64, "dd-first"), plan, grid_size=101)
        udd = run_experiment(spec, SketchConfig(0.001, 64, "uniform"), plan, grid_size=101)
        assert dd.sketch.collapses > udd.sketch.collapses
        assert dd.report.q0_accuracy >= udd.report.q0_accuracy


class TestDeletionCheck:
    def test_uniform_policy(self):
        """Test the deletion check passes under the uniform policy."""
        values = dataset_values("exponential", 3000, seed=3).tolist()
        config = SketchConfig(alpha0=0.001, m=32)
        check = run_deletion_check(values, config, split=1200, delete_fraction=0.3, seed=7, grid_size=101)
        assert check.ok
        assert check.sequential.n == check.survivors
        assert check.merged.n == check.survivors

    def test_bad_split(self):
        """Test a split point past the stream raises ParameterError."""
        with pytest.raises(ParameterError):
            run_deletion_check([1.0], SketchConfig(0.01, 8), split=5, delete_fraction=0.1, seed=0)


class TestRunSweep:
    def test_rows_and_table(self):
        """Test a sweep produces one row per stream, policy and process count."""
        specs = [
            StreamSpec("exponential", (3.5,), n=3000, seed=1),
            StreamSpec("uniform", (5.0, 1e6), n=3000, seed=1),
        ]
        result = run_sweep(
            specs,
            [CollapsePolicy.COLLAPSE_FIRST, CollapsePolicy.UNIFORM],
            [1, 2, 4],
            alpha0=0.001,
            m=32,
            grid_size=101,
            repeats=2,
        )
        assert len(result.rows) == 2 * 2 * 3
        assert all(row.timings["total"].count == 2 for row in result.rows)
        table = result.accuracy_table()
        assert set(table) == {"exponential(3.5)", "uniform(5,1e+06)"}
        for cells in table.values():
            assert cells["uniform"]["q0_accuracy"] == 0.0
            assert cells["dd-first"]["q0_accuracy"] >= cells["uniform"]["q0_accuracy"]
        document = result.to_dict()
        assert len(document["rows"]) == 12

    def test_bad_repeats(self):
        """Test zero repeats raise ParameterError."""
        with pytest.raises(ParameterError):
            run_sweep([], [CollapsePolicy.UNIFORM], [1], alpha0=0.01, m=8, repeats=0)
