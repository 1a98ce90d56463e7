"""Gamma-epoch alignment and the sketch merge operator."""

import logging
from dataclasses import asdict, dataclass
from typing import Any, Dict, Tuple

from .exceptions import IncompatibleSketchError
from .sketch import QuantileSketch, TwoSidedSketch

logger = logging.getLogger(__name__)


@dataclass
class MergeStats:
    """Bucket-level cost accounting for one merge.

    Attributes:
        bucket_ops: Buckets read while summing plus buckets touched by collapses
        alignment_collapses: Uniform collapses needed to equalise the epochs
        post_merge_collapses: Collapses needed to restore the size limit
        epoch: Epoch of the merged sketch
    """

    bucket_ops: int = 0
    alignment_collapses: int = 0
    post_merge_collapses: int = 0
    epoch: int = 0

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def check_compatible(s1: QuantileSketch, s2: QuantileSketch):
    """Raise IncompatibleSketchError unless the two sketches can be aligned.

    The initial accuracies must be bitwise equal, the bucket limits and policies
    equal, and DD-policy sketches must already share an epoch.
    """
    c1, c2 = s1.config, s2.config
    if c1.alpha0.hex() != c2.alpha0.hex():
        raise IncompatibleSketchError(
            f"alpha0 mismatch: {c1.alpha0!r} vs {c2.alpha0!r}", field="alpha0"
        )
    if c1.m != c2.m:
        raise IncompatibleSketchError(f"m mismatch: {c1.m} vs {c2.m}", field="m")
    if c1.policy is not c2.policy:
        raise IncompatibleSketchError(
            f"policy mismatch: {c1.policy.value} vs {c2.policy.value}", field="policy"
        )
    if not c1.policy.is_uniform and s1.epoch != s2.epoch:
        raise IncompatibleSketchError(
            f"{c1.policy.value} sketches at different epochs ({s1.epoch} vs {s2.epoch})",
            field="epoch",
        )


def _raise_to_epoch(sketch: QuantileSketch, target: int, stats: MergeStats) -> QuantileSketch:
    if sketch.epoch == target:
        return sketch
    raised = sketch.copy()
    while raised.epoch < target:
        stats.bucket_ops += raised.size
        raised.uniform_collapse()
        stats.alignment_collapses += 1
    return raised


def align_epochs(
    s1: QuantileSketch, s2: QuantileSketch
) -> Tuple[QuantileSketch, QuantileSketch]:
    """Bring two sketches to the same epoch by collapsing the one with the smaller gamma.

    The inputs are not modified; the lower-epoch input is returned as a collapsed
    copy and the other one is returned as is.

    Raises:
        IncompatibleSketchError: If the configurations differ
    """
    check_compatible(s1, s2)
    target = max(s1.epoch, s2.epoch)
    stats = MergeStats()
    return _raise_to_epoch(s1, target, stats), _raise_to_epoch(s2, target, stats)


def merge_with_stats(
    s1: QuantileSketch, s2: QuantileSketch
) -> Tuple[QuantileSketch, MergeStats]:
    """Merge two sketches and report the bucket operations spent.

    After alignment each output bucket holds the sum of the matching input
    counts; the configured collapse then runs while the size exceeds ``m``.
    Both inputs are left untouched.
    """
    check_compatible(s1, s2)
    stats = MergeStats()
    target = max(s1.epoch, s2.epoch)
    left = _raise_to_epoch(s1, target, stats)
    right = _raise_to_epoch(s2, target, stats)

    merged = QuantileSketch.restore(s1.config, target, ())
    stats.bucket_ops += merged.store.merge_from(left.store)
    stats.bucket_ops += merged.store.merge_from(right.store)

    m = merged.config.m
    uniform = merged.config.policy.is_uniform
    while merged.size > m:
        stats.bucket_ops += merged.size if uniform else 1
        merged.collapse_once()
        stats.post_merge_collapses += 1

    merged.collapses = (
        s1.collapses + s2.collapses + stats.alignment_collapses + stats.post_merge_collapses
    )
    merged.observe_extremes(s1.min_seen, s1.max_seen)
    merged.observe_extremes(s2.min_seen, s2.max_seen)
    stats.epoch = merged.epoch
    logger.debug(
        f"[MERGE] sizes {s1.size}+{s2.size} epochs {s1.epoch}/{s2.epoch} -> "
        f"size {merged.size} epoch {merged.epoch} ({stats.bucket_ops} bucket ops)"
    )
    return merged, stats


def merge(s1: QuantileSketch, s2: QuantileSketch) -> QuantileSketch:
    """Return the sketch of the multiset sum of the inputs' datasets."""
    merged, _ = merge_with_stats(s1, s2)
    return merged


def merge_two_sided(a: TwoSidedSketch, b: TwoSidedSketch) -> TwoSidedSketch:
    """Merge two-sided sketches side by side and add the zero counts."""
    merged = TwoSidedSketch(a.config)
    merged.positive = merge(a.positive, b.positive)
    merged.negative = merge(a.negative, b.negative)
    merged.zero_count = a.zero_count + b.zero_count
    return merged
