"""Exact oracle, accuracy metrics and the desk-scale experiment runner."""

import logging
import statistics
import time
from dataclasses import dataclass, field
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .exceptions import ConsistencyError, ParameterError
from .mapping import quantile_rank
from .reduction import (
    PartitionLayout,
    ReductionPlan,
    build_leaf_sketches,
    build_sketch,
    partition_stream,
    reduce_with_stats,
)
from .sketch import CollapsePolicy, QuantileSketch, SketchConfig
from .generators import StreamSpec, generate_interleaved_ops, generate_stream_detailed

logger = logging.getLogger(__name__)

DEFAULT_GRID_SIZE = 1001
# float round-off allowance on the alpha comparison; the estimator's worst
# case sits exactly at alpha, so a few ulps either way must not count
ROUNDOFF = 1e-9


def quantile_grid(grid_size: int) -> List[float]:
    """Evenly spaced q values ``0, 1/(g-1), ..., 1``."""
    if grid_size < 2:
        raise ParameterError(f"grid_size must be at least 2, got {grid_size}")
    last = grid_size - 1
    return [i / last for i in range(grid_size)]


def exact_quantile(data: Sequence[float], q: float) -> float:
    """Element of rank ``floor(1 + q(n-1))`` (1-based) in the sorted data."""
    array = np.asarray(data, dtype=np.float64)
    if array.size == 0:
        raise ParameterError("exact_quantile needs non-empty data")
    rank = quantile_rank(q, int(array.size))
    return float(np.partition(array, rank - 1)[rank - 1])


def exact_quantiles(sorted_data: np.ndarray, grid: Iterable[float]) -> List[float]:
    """Lower q-quantiles of already sorted data for every q in ``grid``."""
    n = int(sorted_data.size)
    if n == 0:
        raise ParameterError("exact_quantiles needs non-empty data")
    return [float(sorted_data[quantile_rank(q, n) - 1]) for q in grid]


@dataclass
class AccuracyReport:
    """Per-quantile relative error profile of one sketch against the oracle."""

    grid: List[float]
    estimates: List[float]
    exact: List[float]
    rel_err: List[float]
    alpha_final: float
    alpha_target: float
    q0_accuracy: float = 0.0
    collapses: int = 0
    epoch: int = 0
    policy: str = CollapsePolicy.UNIFORM.value
    n: int = 0
    build_ops: Dict[str, int] = field(default_factory=dict)

    @property
    def max_rel_err(self) -> float:
        return max(self.rel_err) if self.rel_err else 0.0

    @property
    def violations(self) -> int:
        """Grid points whose error exceeds the final alpha."""
        limit = self.alpha_final * (1.0 + ROUNDOFF)
        return sum(1 for err in self.rel_err if err > limit)

    def rows(self) -> List[Tuple[float, float, float, float]]:
        return list(zip(self.grid, self.estimates, self.exact, self.rel_err))

    def summary(self) -> Dict[str, Any]:
        return {
            "policy": self.policy,
            "n": self.n,
            "q0_accuracy": self.q0_accuracy,
            "alpha_final": self.alpha_final,
            "alpha_target": self.alpha_target,
            "max_rel_err": self.max_rel_err,
            "violations": self.violations,
            "epoch": self.epoch,
            "collapses": self.collapses,
            "grid_size": len(self.grid),
            "build_ops": dict(self.build_ops),
        }


def q0_accuracy(report: AccuracyReport) -> float:
    """Smallest grid q such that every grid point from q up to 1 is within the target alpha.

    The target is alpha0 for DD policies and the final alpha for the uniform
    policy. Returns ``1 + step`` when even q = 1 misses the target.
    """
    limit = report.alpha_target * (1.0 + ROUNDOFF)
    grid = report.grid
    for i in range(len(grid) - 1, -1, -1):
        if report.rel_err[i] > limit:
            if i == len(grid) - 1:
                step = grid[-1] - grid[-2] if len(grid) > 1 else 1.0
                return 1.0 + step
            return grid[i + 1]
    return grid[0] if grid else 0.0


def error_profile(
    sketch: QuantileSketch,
    data: Sequence[float],
    grid_size: int = DEFAULT_GRID_SIZE,
    sorted_data: Optional[np.ndarray] = None,
) -> AccuracyReport:
    """Compare sketch answers with exact lower quantiles on an evenly spaced grid.

    Args:
        sketch: Sketch built from exactly ``data``
        data: The dataset (any order)
        grid_size: Number of grid points including q=0 and q=1
        sorted_data: Optional pre-sorted copy of ``data`` to skip the sort

    Raises:
        ConsistencyError: If the sketch count differs from the data size
    """
    if sorted_data is None:
        sorted_data = np.sort(np.asarray(data, dtype=np.float64))
    if sketch.n != int(sorted_data.size):
        raise ConsistencyError(
            f"sketch holds {sketch.n} items but the dataset has {int(sorted_data.size)}"
        )
    grid = quantile_grid(grid_size)
    estimates = sketch.quantiles(grid)
    exact = exact_quantiles(sorted_data, grid)
    rel_err = [abs(est - x) / x for est, x in zip(estimates, exact)]
    alpha_final = sketch.alpha
    policy = sketch.config.policy
    report = AccuracyReport(
        grid=grid,
        estimates=estimates,
        exact=exact,
        rel_err=rel_err,
        alpha_final=alpha_final,
        alpha_target=alpha_final if policy.is_uniform else sketch.config.alpha0,
        collapses=sketch.collapses,
        epoch=sketch.epoch,
        policy=policy.value,
        n=sketch.n,
    )
    report.q0_accuracy = q0_accuracy(report)
    return report


class TimingStats:
    """Summary statistics over repeated timings of one phase."""

    def __init__(self, times: List[float]):
        """Initialize timing stats from a list of execution times.

        Args:
            times: List of execution times in seconds
        """
        self.times = times
        self.count = len(times)

        if times:
            self.mean = statistics.mean(times)
            self.median = statistics.median(times)
            self.min = min(times)
            self.max = max(times)
            self.std_dev = statistics.stdev(times) if len(times) > 1 else 0.0
            self.p95 = self._percentile(sorted(times), 95)
        else:
            self.mean = self.median = self.min = self.max = self.std_dev = 0.0
            self.p95 = 0.0

    def _percentile(self, sorted_data: List[float], percentile: float) -> float:
        """Linear-interpolated percentile of sorted data."""
        k = (len(sorted_data) - 1) * (percentile / 100.0)
        f = int(k)
        c = k - f
        if f + 1 < len(sorted_data):
            return sorted_data[f] + c * (sorted_data[f + 1] - sorted_data[f])
        return sorted_data[f]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "count": self.count,
            "mean": self.mean,
            "median": self.median,
            "min": self.min,
            "max": self.max,
            "std_dev": self.std_dev,
            "p95": self.p95,
            "raw_times": self.times,
        }


@dataclass
class ExperimentResult:
    """Everything one simulated parallel run produced."""

    spec: StreamSpec
    config: SketchConfig
    plan: ReductionPlan
    report: AccuracyReport
    sketch: QuantileSketch
    timings: Dict[str, float]
    reduction: Dict[str, Any]
    leaf_collapses: List[int]
    rejected: int
    data_min: Optional[float]
    data_max: Optional[float]
    gamma_bound_ok: bool
    identical_to_sequential: Optional[bool] = None

    def summary(self) -> Dict[str, Any]:
        """JSON summary: accuracy, lineage, collapses, timings and dataset extremes."""
        summary = {
            "dataset": self.spec.to_dict(),
            "config": self.config.to_dict(),
            "procs": self.plan.p,
            "tree": self.plan.label(),
            "q0_accuracy": self.report.q0_accuracy,
            "alpha_final": self.report.alpha_final,
            "max_rel_err": self.report.max_rel_err,
            "violations": self.report.violations,
            "epoch": self.sketch.epoch,
            "gamma": self.sketch.gamma,
            "collapses": self.sketch.collapses,
            "leaf_collapses": sum(self.leaf_collapses),
            "buckets": self.sketch.size,
            "gamma_bound_ok": self.gamma_bound_ok,
            "reduction": self.reduction,
            "timings": self.timings,
            "rejected_draws": self.rejected,
            "data_min": self.data_min,
            "data_max": self.data_max,
        }
        if self.identical_to_sequential is not None:
            summary["identical"] = self.identical_to_sequential
        return summary


def run_experiment(
    spec: StreamSpec,
    config: SketchConfig,
    plan: ReductionPlan,
    grid_size: int = DEFAULT_GRID_SIZE,
    workers: int = 1,
    compare_sequential: bool = False,
) -> ExperimentResult:
    """Generate, partition, build leaves, reduce and evaluate against the oracle.

    With ``compare_sequential`` the whole stream is also fed to a single sketch
    and ``identical_to_sequential`` records whether the reduced sketch equals it.
    """
    timings: Dict[str, float] = {}
    started = time.perf_counter()

    tick = time.perf_counter()
    generated = generate_stream_detailed(spec)
    values = generated.values
    timings["generate"] = time.perf_counter() - tick
    logger.info(f"[EXPERIMENT] generated {values.size} values from {spec.label()}")

    tick = time.perf_counter()
    layout: PartitionLayout = partition_stream(int(values.size), plan.p)
    leaves = build_leaf_sketches(values, layout, config, workers=workers)
    timings["build"] = time.perf_counter() - tick

    tick = time.perf_counter()
    reduced, reduction_stats = reduce_with_stats(leaves, plan)
    timings["reduce"] = time.perf_counter() - tick
    # critical path: one leaf build plus the reduction
    timings["parallel_estimate"] = timings["build"] / plan.p + timings["reduce"]

    identical = None
    if compare_sequential:
        tick = time.perf_counter()
        sequential = build_sketch(config, values)
        identical = sequential == reduced
        timings["sequential"] = time.perf_counter() - tick
        logger.info(f"[EXPERIMENT] reduced sketch identical to sequential: {identical}")

    tick = time.perf_counter()
    report = error_profile(reduced, values, grid_size=grid_size)
    report.build_ops = {
        "merges": reduction_stats.merges,
        "merge_bucket_ops": reduction_stats.bucket_ops,
        "max_merge_bucket_ops": reduction_stats.max_bucket_ops,
    }
    timings["evaluate"] = time.perf_counter() - tick
    timings["total"] = time.perf_counter() - started

    return ExperimentResult(
        spec=spec,
        config=config,
        plan=plan,
        report=report,
        sketch=reduced,
        timings=timings,
        reduction=reduction_stats.to_dict(),
        leaf_collapses=[leaf.collapses for leaf in leaves],
        rejected=generated.rejected,
        data_min=float(values.min()) if values.size else None,
        data_max=float(values.max()) if values.size else None,
        gamma_bound_ok=reduced.satisfies_gamma_bound(),
        identical_to_sequential=identical,
    )


@dataclass
class DeletionCheck:
    """Outcome of one interleaved insert/delete run, merged and sequential."""

    sequential: QuantileSketch
    merged: QuantileSketch
    survivors: int
    sequential_report: Optional[AccuracyReport]
    merged_report: Optional[AccuracyReport]

    @property
    def bounds_ok(self) -> bool:
        return self.sequential.satisfies_gamma_bound() and self.merged.satisfies_gamma_bound()

    @property
    def accurate(self) -> bool:
        reports = (self.sequential_report, self.merged_report)
        return all(report is None or report.violations == 0 for report in reports)

    @property
    def ok(self) -> bool:
        return self.bounds_ok and self.accurate


def _apply_ops(sketch: QuantileSketch, ops: Sequence[Tuple[str, float]]):
    for op, x in ops:
        if op == "insert":
            sketch.insert(x)
        else:
            sketch.delete(x)


def run_deletion_check(
    values: Sequence[float],
    config: SketchConfig,
    split: int,
    delete_fraction: float,
    seed: int,
    grid_size: int = DEFAULT_GRID_SIZE,
) -> DeletionCheck:
    """Interleave deletions into two halves of a stream and check both build paths.

    Each half draws its deletions from its own survivors, so every partial
    sketch stays valid on its own. The sequential sketch replays both halves
    in order; the merged sketch merges the two halves' sketches. Both are
    checked against the exact quantiles of the net multiset.
    """
    if not 0 <= split <= len(values):
        raise ParameterError(f"split point {split} outside [0, {len(values)}]")
    ops_a, survivors_a = generate_interleaved_ops(values[:split], delete_fraction, seed)
    ops_b, survivors_b = generate_interleaved_ops(values[split:], delete_fraction, seed + 1)

    sequential = QuantileSketch(config)
    _apply_ops(sequential, ops_a)
    _apply_ops(sequential, ops_b)

    left = QuantileSketch(config)
    right = QuantileSketch(config)
    _apply_ops(left, ops_a)
    _apply_ops(right, ops_b)
    merged, _ = reduce_with_stats([left, right], ReductionPlan(p=2))

    survivors = np.sort(np.asarray(survivors_a + survivors_b, dtype=np.float64))
    sequential_report = merged_report = None
    if survivors.size:
        sequential_report = error_profile(sequential, survivors, grid_size, sorted_data=survivors)
        merged_report = error_profile(merged, survivors, grid_size, sorted_data=survivors)
    logger.debug(
        f"[DELETION] {len(ops_a) + len(ops_b)} ops, {survivors.size} survivors, "
        f"epochs {sequential.epoch}/{merged.epoch}"
    )
    return DeletionCheck(
        sequential=sequential,
        merged=merged,
        survivors=int(survivors.size),
        sequential_report=sequential_report,
        merged_report=merged_report,
    )


@dataclass
class SweepRow:
    """One (dataset, policy, procs) cell of the scaling sweep."""

    dataset: str
    policy: str
    procs: int
    q0_accuracy: float
    alpha_final: float
    collapses: int
    epoch: int
    violations: int
    timings: Dict[str, TimingStats]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "dataset": self.dataset,
            "policy": self.policy,
            "procs": self.procs,
            "q0_accuracy": self.q0_accuracy,
            "alpha_final": self.alpha_final,
            "collapses": self.collapses,
            "epoch": self.epoch,
            "violations": self.violations,
            "timings": {phase: stats.to_dict() for phase, stats in self.timings.items()},
        }


@dataclass
class SweepResult:
    rows: List[SweepRow] = field(default_factory=list)
    # error profile of the largest-p run per (dataset, policy)
    profiles: Dict[Tuple[str, str], AccuracyReport] = field(default_factory=dict)

    def accuracy_table(self) -> Dict[str, Dict[str, Dict[str, float]]]:
        """Per dataset and policy: q0-accuracy and final alpha at the largest process count."""
        table: Dict[str, Dict[str, Dict[str, float]]] = {}
        for (dataset, policy), report in self.profiles.items():
            table.setdefault(dataset, {})[policy] = {
                "q0_accuracy": report.q0_accuracy,
                "alpha_final": report.alpha_final,
            }
        return table

    def to_dict(self) -> Dict[str, Any]:
        return {
            "rows": [row.to_dict() for row in self.rows],
            "accuracy": self.accuracy_table(),
        }


def run_sweep(
    datasets: Sequence[StreamSpec],
    policies: Sequence[CollapsePolicy],
    procs: Sequence[int],
    alpha0: float,
    m: int,
    grid_size: int = DEFAULT_GRID_SIZE,
    repeats: int = 1,
    workers: int = 1,
    tree: str = "balanced",
) -> SweepResult:
    """Run the simulated parallel experiment over datasets x policies x process counts.

    Accuracy and collapse figures come from the first repetition (they are
    deterministic); every repetition contributes to the timing statistics.
    """
    if repeats < 1:
        raise ParameterError(f"repeats must be at least 1, got {repeats}")
    result = SweepResult()
    largest = max(procs)
    for spec in datasets:
        for policy in policies:
            config = SketchConfig(alpha0=alpha0, m=m, policy=policy)
            for p in procs:
                plan = ReductionPlan.parse(p, tree)
                runs = [
                    run_experiment(spec, config, plan, grid_size=grid_size, workers=workers)
                    for _ in range(repeats)
                ]
                first = runs[0]
                phases = first.timings.keys()
                row = SweepRow(
                    dataset=spec.label(),
                    policy=config.policy.value,
                    procs=p,
                    q0_accuracy=first.report.q0_accuracy,
                    alpha_final=first.report.alpha_final,
                    collapses=first.sketch.collapses,
                    epoch=first.sketch.epoch,
                    violations=first.report.violations,
                    timings={
                        phase: TimingStats([run.timings[phase] for run in runs])
                        for phase in phases
                    },
                )
                result.rows.append(row)
                if p == largest:
                    result.profiles[(row.dataset, row.policy)] = first.report
                logger.info(
                    f"[SWEEP] {row.dataset} {row.policy} p={p}: q0={row.q0_accuracy:.3f} "
                    f"alpha={row.alpha_final:.4g} collapses={row.collapses}"
                )
    return result
