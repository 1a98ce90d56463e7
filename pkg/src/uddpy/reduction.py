"""Stream partitioning and simulated parallel tree reduction of sketches."""

import logging
import random
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Sequence, Tuple, Union

from .exceptions import ParameterError
from .merge import merge_with_stats
from .sketch import QuantileSketch, SketchConfig

logger = logging.getLogger(__name__)

# A merge tree is either a leaf index or a pair of subtrees.
MergeTree = Union[int, Tuple["MergeTree", "MergeTree"]]


class TreeShape(str, Enum):
    BALANCED = "balanced"
    LINEAR = "linear"
    RANDOM = "random"


@dataclass(frozen=True)
class ReductionPlan:
    """Shape of the binary merge tree over ``p`` leaves.

    Attributes:
        p: Number of partitions (leaves)
        tree: Tree shape
        seed: Seed for the random shape, ignored otherwise
    """

    p: int
    tree: TreeShape = TreeShape.BALANCED
    seed: int = 0

    def __post_init__(self):
        if self.p < 1:
            raise ParameterError(f"a reduction needs at least one leaf, got p={self.p}")
        object.__setattr__(self, "tree", TreeShape(self.tree))

    @classmethod
    def parse(cls, p: int, spec: str) -> "ReductionPlan":
        """Build a plan from ``balanced``, ``linear``, ``random`` or ``random:SEED``."""
        name, _, seed = spec.partition(":")
        try:
            shape = TreeShape(name.strip().lower())
        except ValueError:
            raise ParameterError(
                f"unknown tree shape {spec!r}; expected balanced, linear or random[:seed]"
            ) from None
        try:
            return cls(p=p, tree=shape, seed=int(seed) if seed else 0)
        except ValueError as e:
            raise ParameterError(f"bad tree seed in {spec!r}: {e}") from None

    def label(self) -> str:
        if self.tree is TreeShape.RANDOM:
            return f"random:{self.seed}"
        return self.tree.value

    def build_tree(self) -> MergeTree:
        """Return the merge tree as nested pairs of leaf indices."""
        nodes: List[MergeTree] = list(range(self.p))
        if self.tree is TreeShape.LINEAR:
            tree = nodes[0]
            for leaf in nodes[1:]:
                tree = (tree, leaf)
            return tree
        if self.tree is TreeShape.BALANCED:
            # pairwise, level by level; an odd node is carried to the next level
            while len(nodes) > 1:
                paired = [(nodes[i], nodes[i + 1]) for i in range(0, len(nodes) - 1, 2)]
                if len(nodes) % 2:
                    paired.append(nodes[-1])
                nodes = paired
            return nodes[0]
        rng = random.Random(self.seed)
        while len(nodes) > 1:
            i, j = sorted(rng.sample(range(len(nodes)), 2))
            right = nodes.pop(j)
            left = nodes.pop(i)
            nodes.append((left, right) if rng.random() < 0.5 else (right, left))
        return nodes[0]


def count_merges(tree: MergeTree) -> int:
    """Number of internal nodes of a merge tree."""
    stack = [tree]
    merges = 0
    while stack:
        node = stack.pop()
        if isinstance(node, tuple):
            merges += 1
            stack.extend(node)
    return merges


def tree_leaves(tree: MergeTree) -> List[int]:
    """Leaf indices of a merge tree, left to right."""
    stack = [tree]
    leaves: List[int] = []
    while stack:
        node = stack.pop()
        if isinstance(node, tuple):
            stack.append(node[1])
            stack.append(node[0])
        else:
            leaves.append(node)
    return leaves


@dataclass(frozen=True)
class PartitionLayout:
    """Contiguous split of ``n`` items over ``p`` partitions."""

    n: int
    p: int
    sizes: Tuple[int, ...]

    def offsets(self) -> List[Tuple[int, int]]:
        """(start, stop) index pairs of each partition."""
        bounds = []
        start = 0
        for size in self.sizes:
            bounds.append((start, start + size))
            start += size
        return bounds

    def split(self, values: Sequence[float]) -> List[Sequence[float]]:
        return [values[start:stop] for start, stop in self.offsets()]


def partition_stream(n: int, p: int) -> PartitionLayout:
    """Give the first ``n mod p`` partitions ``ceil(n/p)`` items and the rest ``floor(n/p)``.

    Raises:
        ParameterError: If p < 1 or n < 0
    """
    if p < 1:
        raise ParameterError(f"partition count must be at least 1, got {p}")
    if n < 0:
        raise ParameterError(f"item count must be non-negative, got {n}")
    base, extra = divmod(n, p)
    sizes = tuple(base + 1 if i < extra else base for i in range(p))
    return PartitionLayout(n=n, p=p, sizes=sizes)


def build_sketch(config: SketchConfig, values: Sequence[float]) -> QuantileSketch:
    """Build one sketch from a sequence of positive values."""
    sketch = QuantileSketch(config)
    sketch.update(values)
    return sketch


def build_leaf_sketches(
    values: Sequence[float],
    layout: PartitionLayout,
    config: SketchConfig,
    workers: int = 1,
) -> List[QuantileSketch]:
    """Build one sketch per partition, optionally in a process pool.

    Leaves share no state, so the result is identical for any ``workers``.
    """
    chunks = layout.split(values)
    empty = sum(1 for size in layout.sizes if size == 0)
    if empty:
        logger.warning(f"[PARTITION] {empty} of {layout.p} partitions are empty")
    if workers <= 1 or layout.p == 1:
        return [build_sketch(config, chunk) for chunk in chunks]
    logger.info(f"[PARTITION] building {layout.p} leaves on {workers} workers")
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(build_sketch, [config] * layout.p, chunks))


@dataclass
class ReductionStats:
    """Totals gathered while folding a merge tree."""

    merges: int = 0
    bucket_ops: int = 0
    max_bucket_ops: int = 0
    alignment_collapses: int = 0
    post_merge_collapses: int = 0
    per_merge_ops: List[int] = field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "merges": self.merges,
            "bucket_ops": self.bucket_ops,
            "max_bucket_ops": self.max_bucket_ops,
            "alignment_collapses": self.alignment_collapses,
            "post_merge_collapses": self.post_merge_collapses,
        }


def reduce_with_stats(
    sketches: Sequence[QuantileSketch], plan: ReductionPlan
) -> Tuple[QuantileSketch, ReductionStats]:
    """Fold ``merge`` over the plan's tree and account for every merge."""
    if not sketches:
        raise ParameterError("cannot reduce an empty list of sketches")
    if len(sketches) != plan.p:
        raise ParameterError(f"plan expects {plan.p} leaves, got {len(sketches)} sketches")

    stats = ReductionStats()
    tree = plan.build_tree()
    # iterative post-order so deep linear trees do not hit the recursion limit
    operands: List[QuantileSketch] = []
    stack: List[Tuple[MergeTree, bool]] = [(tree, False)]
    while stack:
        node, expanded = stack.pop()
        if not isinstance(node, tuple):
            operands.append(sketches[node])
            continue
        if not expanded:
            stack.append((node, True))
            stack.append((node[1], False))
            stack.append((node[0], False))
            continue
        right = operands.pop()
        left = operands.pop()
        merged, merge_stats = merge_with_stats(left, right)
        stats.merges += 1
        stats.bucket_ops += merge_stats.bucket_ops
        stats.max_bucket_ops = max(stats.max_bucket_ops, merge_stats.bucket_ops)
        stats.alignment_collapses += merge_stats.alignment_collapses
        stats.post_merge_collapses += merge_stats.post_merge_collapses
        stats.per_merge_ops.append(merge_stats.bucket_ops)
        operands.append(merged)

    logger.info(
        f"[REDUCE] {plan.label()} tree over {plan.p} leaves: {stats.merges} merges, "
        f"{stats.bucket_ops} bucket ops"
    )
    return operands[0], stats


def reduce_sketches(sketches: Sequence[QuantileSketch], plan: ReductionPlan) -> QuantileSketch:
    """Reduce leaf sketches to one; the result does not depend on tree shape or leaf order."""
    reduced, _ = reduce_with_stats(sketches, plan)
    return reduced
