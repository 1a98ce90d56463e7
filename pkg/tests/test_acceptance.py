"""End-to-end acceptance checks: exact merge equalities, accuracy and cost.

Randomized checks run a reduced number of cases by default; the ``slow``
variants run the full counts and stream sizes.
"""

import numpy as np
import pytest

from src.uddpy.codec import decode, encode
from src.uddpy.evaluation import error_profile, run_deletion_check
from src.uddpy.merge import merge, merge_with_stats
from src.uddpy.reduction import ReductionPlan, build_sketch, partition_stream, reduce_sketches
from src.uddpy.sketch import CollapsePolicy, QuantileSketch, SketchConfig
from tests.conftest import DATASETS, assert_same_sketch, dataset_values

DATASET_NAMES = sorted(DATASETS)
BUCKET_LIMITS = (8, 32, 128, 512)
ALPHAS = (0.001, 0.01)


def random_config(rng, policy=CollapsePolicy.UNIFORM) -> SketchConfig:
    return SketchConfig(
        alpha0=float(rng.choice(ALPHAS)),
        m=int(rng.choice(BUCKET_LIMITS)),
        policy=policy,
    )


def random_stream(rng, low: int, high: int) -> np.ndarray:
    name = DATASET_NAMES[int(rng.integers(len(DATASET_NAMES)))]
    n = int(rng.integers(low, high + 1))
    return dataset_values(name, n, seed=int(rng.integers(2**62)))


def check_merge_equals_sequential(cases: int, low: int, high: int):
    rng = np.random.default_rng(1001)
    for _ in range(cases):
        values = random_stream(rng, low, high)
        config = random_config(rng)
        split = int(rng.integers(0, values.size + 1))
        sequential = build_sketch(config, values)
        merged = merge(build_sketch(config, values[:split]), build_sketch(config, values[split:]))
        assert_same_sketch(merged, sequential)
        assert merged.satisfies_gamma_bound()
        assert sequential.satisfies_gamma_bound()


def check_permutation_invariance(streams: int, low: int, high: int):
    rng = np.random.default_rng(2002)
    for _ in range(streams):
        values = random_stream(rng, low, high)
        config = random_config(rng)
        reference = build_sketch(config, values)
        for _ in range(5):
            assert_same_sketch(build_sketch(config, rng.permutation(values)), reference)


class TestMergeEqualsSequential:
    def test_randomized_cases(self):
        """Test merging the two halves of a random stream equals building it in one pass."""
        check_merge_equals_sequential(cases=40, low=1000, high=10_000)

    @pytest.mark.slow
    def test_full_randomized_cases(self):
        """Test the merge equality over a thousand random streams."""
        check_merge_equals_sequential(cases=1000, low=1000, high=100_000)


class TestPermutationInvariance:
    def test_shuffled_streams(self):
        """Test shuffling a stream never changes its sketch."""
        check_permutation_invariance(streams=20, low=500, high=3000)

    @pytest.mark.slow
    def test_full_shuffled_streams(self):
        """Test permutation invariance over many longer streams."""
        check_permutation_invariance(streams=200, low=1000, high=10_000)


class TestReductionAlgebra:
    @pytest.mark.parametrize("p", [2, 3, 4, 8, 16])
    def test_tree_shapes_and_leaf_order(self, p):
        """Test every tree shape and leaf order reduces to the sequential sketch."""
        config = SketchConfig(alpha0=0.001, m=64)
        values = dataset_values("lognormal", 20_000, seed=p)
        layout = partition_stream(values.size, p)
        leaves = [build_sketch(config, part) for part in layout.split(values)]
        reference = build_sketch(config, values)

        for shape in ("balanced", "linear", "random:1", "random:2", "random:3"):
            assert_same_sketch(reduce_sketches(leaves, ReductionPlan.parse(p, shape)), reference)

        rng = np.random.default_rng(p)
        for _ in range(3):
            shuffled = [leaves[i] for i in rng.permutation(p)]
            assert_same_sketch(reduce_sketches(shuffled, ReductionPlan(p=p)), reference)

    def test_empty_sketch_is_identity(self):
        """Test merging with an empty sketch leaves the envelope unchanged."""
        config = SketchConfig(alpha0=0.001, m=64)
        sketch = build_sketch(config, dataset_values("exponential", 10_000, seed=3))
        merged = merge(sketch, QuantileSketch(config))
        assert merged.buckets() == sketch.buckets()
        assert merged.n == sketch.n
        assert encode(merged) == encode(sketch)


def check_uniform_accuracy(n: int):
    config = SketchConfig(alpha0=0.001, m=512)
    for name in DATASET_NAMES:
        values = dataset_values(name, n, seed=17)
        sketch = build_sketch(config, values)
        report = error_profile(sketch, values, grid_size=1001)
        assert report.q0_accuracy == 0.0, name
        assert report.violations == 0, name
        assert sketch.satisfies_gamma_bound(), name


class TestAccuracyGuarantee:
    def test_uniform_policy_every_dataset(self):
        """Test the uniform policy stays within its alpha on every dataset."""
        check_uniform_accuracy(100_000)

    @pytest.mark.slow
    def test_uniform_policy_million_items(self):
        """Test the accuracy guarantee at a million items."""
        check_uniform_accuracy(1_000_000)


def collapse_policy_comparison(n: int):
    """Per dataset: (dd report, dd sketch, uniform report, uniform sketch)."""
    results = {}
    for name in DATASET_NAMES:
        values = dataset_values(name, n, seed=23)
        ordered = np.sort(values)
        row = []
        for policy in (CollapsePolicy.COLLAPSE_FIRST, CollapsePolicy.UNIFORM):
            sketch = build_sketch(SketchConfig(alpha0=0.001, m=512, policy=policy), values)
            row.extend([error_profile(sketch, values, 1001, sorted_data=ordered), sketch])
        results[name] = row
    return results


def check_policy_ordering(n: int):
    results = collapse_policy_comparison(n)
    for name, (dd_report, _, udd_report, udd_sketch) in results.items():
        assert dd_report.q0_accuracy >= udd_report.q0_accuracy, name
        assert udd_sketch.satisfies_gamma_bound(), name
    for name in ("exponential", "lognormal"):
        assert results[name][0].q0_accuracy > 0.5, name

    dd_sketch, udd_sketch = results["lognormal"][1], results["lognormal"][3]
    assert udd_sketch.collapses > 0
    assert dd_sketch.collapses >= 100 * udd_sketch.collapses


class TestCollapsePolicies:
    def test_dd_versus_uniform(self):
        """Test DD collapses lose low quantiles that the uniform policy keeps."""
        check_policy_ordering(100_000)

    @pytest.mark.slow
    def test_dd_versus_uniform_ten_million(self):
        """Test the policy comparison at ten million items."""
        check_policy_ordering(10_000_000)


def check_deletion_streams(streams: int, high: int):
    rng = np.random.default_rng(3003)
    for _ in range(streams):
        values = random_stream(rng, 500, high).tolist()
        config = random_config(rng)
        check = run_deletion_check(
            values,
            config,
            split=int(rng.integers(0, len(values) + 1)),
            delete_fraction=float(rng.uniform(0.05, 0.5)),
            seed=int(rng.integers(2**32)),
            grid_size=201,
        )
        assert check.bounds_ok
        assert check.accurate
        assert check.merged.n == check.survivors == check.sequential.n


class TestDeletionStreams:
    def test_interleaved_deletions(self):
        """Test split streams with deletions merge to the sequential survivors."""
        check_deletion_streams(streams=20, high=3000)

    @pytest.mark.slow
    def test_full_interleaved_deletions(self):
        """Test deletion streams over two hundred longer cases."""
        check_deletion_streams(streams=200, high=10_000)


class TestCodecRoundTrip:
    def test_randomized_sketches(self):
        """Test encode and decode preserve bytes and merge results for random sketches."""
        rng = np.random.default_rng(4004)
        policies = list(CollapsePolicy)
        for _ in range(500):
            config = random_config(rng, policy=policies[int(rng.integers(len(policies)))])
            left = build_sketch(config, random_stream(rng, 0, 2000))
            right = build_sketch(config, random_stream(rng, 0, 2000))
            for sketch in (left, right):
                payload = encode(sketch)
                assert encode(decode(payload)) == payload
            before = encode(merge(left, right))
            after = encode(merge(decode(encode(left)), decode(encode(right))))
            assert after == before


class TestMergeCostCeiling:
    @pytest.mark.parametrize(
        "n", [10_000, 100_000, pytest.param(1_000_000, marks=pytest.mark.slow)]
    )
    def test_bucket_ops_bounded(self, n):
        """Test one merge touches at most a constant multiple of m buckets."""
        m = 512
        config = SketchConfig(alpha0=0.001, m=m)
        values = dataset_values("lognormal", n, seed=31)
        half = n // 2
        _, stats = merge_with_stats(
            build_sketch(config, values[:half]), build_sketch(config, values[half:])
        )
        assert stats.bucket_ops <= 8 * m
