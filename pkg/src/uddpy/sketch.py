"""DDSketch and UDDSketch quantile sketches over a sparse bucket store."""

import logging
import math
from dataclasses import asdict, dataclass
from enum import Enum
from typing import Any, Dict, Iterable, List, Optional, Tuple

from .exceptions import (
    DomainError,
    ParameterError,
    RangeOverflowError,
    SketchStateError,
    UnderflowError,
)
from .mapping import (
    alpha_from_gamma,
    gamma_for_epoch,
    gamma_from_alpha,
    quantile_rank,
    value_estimate,
)
from .store import BucketStore

logger = logging.getLogger(__name__)


class CollapsePolicy(str, Enum):
    """How a sketch shrinks back to ``m`` buckets."""

    UNIFORM = "uniform"
    COLLAPSE_FIRST = "dd-first"
    COLLAPSE_LAST = "dd-last"

    @property
    def code(self) -> int:
        """Single-byte code used by the binary envelope."""
        return _POLICY_CODES[self]

    @classmethod
    def from_code(cls, code: int) -> "CollapsePolicy":
        for policy, value in _POLICY_CODES.items():
            if value == code:
                return policy
        raise ValueError(f"unknown policy code {code}")

    @property
    def is_uniform(self) -> bool:
        return self is CollapsePolicy.UNIFORM


_POLICY_CODES = {
    CollapsePolicy.UNIFORM: 0,
    CollapsePolicy.COLLAPSE_FIRST: 1,
    CollapsePolicy.COLLAPSE_LAST: 2,
}

POLICY_ALIASES = {
    "uniform": CollapsePolicy.UNIFORM,
    "udd": CollapsePolicy.UNIFORM,
    "dd-first": CollapsePolicy.COLLAPSE_FIRST,
    "first": CollapsePolicy.COLLAPSE_FIRST,
    "dd": CollapsePolicy.COLLAPSE_FIRST,
    "dd-last": CollapsePolicy.COLLAPSE_LAST,
    "last": CollapsePolicy.COLLAPSE_LAST,
}


def parse_policy(value: Any) -> CollapsePolicy:
    """Accept a CollapsePolicy or one of its textual aliases."""
    if isinstance(value, CollapsePolicy):
        return value
    try:
        return POLICY_ALIASES[str(value).strip().lower()]
    except KeyError:
        raise ParameterError(
            f"unknown collapse policy {value!r}; expected one of {sorted(POLICY_ALIASES)}"
        ) from None


@dataclass(frozen=True)
class SketchConfig:
    """Immutable sketch parameters.

    Attributes:
        alpha0: Initial relative accuracy, strictly between 0 and 1
        m: Maximum number of buckets, at least 2
        policy: Collapse policy applied when the bucket limit is exceeded
    """

    alpha0: float
    m: int
    policy: CollapsePolicy = CollapsePolicy.UNIFORM

    def __post_init__(self):
        if not 0.0 < self.alpha0 < 1.0:
            raise ParameterError(f"alpha0 must lie in (0, 1), got {self.alpha0!r}")
        if isinstance(self.m, bool) or not isinstance(self.m, int) or self.m < 2:
            raise ParameterError(f"m must be an integer >= 2, got {self.m!r}")
        object.__setattr__(self, "policy", parse_policy(self.policy))

    @property
    def gamma0(self) -> float:
        return gamma_from_alpha(self.alpha0)

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data["policy"] = self.policy.value
        return data

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "SketchConfig":
        return cls(
            alpha0=float(data["alpha0"]),
            m=int(data["m"]),
            policy=parse_policy(data.get("policy", "uniform")),
        )


def gamma_bound(min_seen: float, max_seen: float, m: int) -> float:
    """Upper bound ``(max/min) ** (2 / (m - 1))`` on gamma after at least one uniform collapse."""
    return (max_seen / min_seen) ** (2.0 / (m - 1))


class QuantileSketch:
    """One-sided quantile sketch for positive values.

    With the uniform policy this is UDDSketch: on overflow every pair of buckets
    is merged and gamma is squared. With the ``dd-first``/``dd-last`` policies it
    is DDSketch: the two extreme buckets at one end are folded and gamma never
    changes.

    ``epoch`` counts the gamma squarings and is the authoritative coordinate of
    the gamma lineage; ``gamma`` is only ever updated by squaring.
    """

    def __init__(self, config: SketchConfig):
        self.config = config
        self.store = BucketStore()
        self.epoch = 0
        self.collapses = 0
        self.min_seen: Optional[float] = None
        self.max_seen: Optional[float] = None
        self._set_gamma(config.gamma0)

    @classmethod
    def create(
        cls, alpha0: float, m: int, policy: Any = CollapsePolicy.UNIFORM
    ) -> "QuantileSketch":
        """Build an empty sketch from raw parameters."""
        return cls(SketchConfig(alpha0=alpha0, m=m, policy=parse_policy(policy)))

    @classmethod
    def restore(
        cls,
        config: SketchConfig,
        epoch: int,
        buckets: Iterable[Tuple[int, int]],
        min_seen: Optional[float] = None,
        max_seen: Optional[float] = None,
        collapses: int = 0,
    ) -> "QuantileSketch":
        """Rebuild a sketch from its serialized state."""
        sketch = cls(config)
        sketch.epoch = epoch
        sketch._set_gamma(gamma_for_epoch(config.alpha0, epoch))
        sketch.store = BucketStore(buckets)
        sketch.min_seen = min_seen
        sketch.max_seen = max_seen
        sketch.collapses = collapses
        return sketch

    def __repr__(self):
        return (
            f"QuantileSketch(policy={self.config.policy.value}, alpha0={self.config.alpha0}, "
            f"m={self.config.m}, epoch={self.epoch}, n={self.n}, size={self.size})"
        )

    def __eq__(self, other) -> bool:
        if not isinstance(other, QuantileSketch):
            return NotImplemented
        return (
            self.config == other.config
            and self.epoch == other.epoch
            and self.n == other.n
            and self.store == other.store
        )

    def _set_gamma(self, gamma: float):
        self.gamma = gamma
        self._ln_gamma = math.log(gamma)

    @property
    def n(self) -> int:
        """Net item count (insertions minus deletions)."""
        return self.store.total

    @property
    def size(self) -> int:
        """Number of live buckets."""
        return len(self.store)

    @property
    def alpha(self) -> float:
        """Relative accuracy guaranteed by the current gamma."""
        return alpha_from_gamma(self.gamma)

    def is_empty(self) -> bool:
        return self.store.total == 0

    def buckets(self) -> List[Tuple[int, int]]:
        """(key, count) pairs in ascending key order."""
        return self.store.items()

    def key_for(self, x: float) -> int:
        """Bucket key of ``x`` under the current gamma."""
        if not 0.0 < x < math.inf:
            raise DomainError(f"sketch accepts finite positive values only, got {x!r}")
        return math.ceil(math.log(x) / self._ln_gamma)

    def insert(self, x: float):
        """Add one occurrence of ``x`` and collapse until the bucket limit holds."""
        self.store.add(self.key_for(x))
        if self.min_seen is None or x < self.min_seen:
            self.min_seen = x
        if self.max_seen is None or x > self.max_seen:
            self.max_seen = x
        if len(self.store) > self.config.m:
            self.enforce_size()

    def update(self, values: Iterable[float]):
        """Insert every value of ``values`` in order."""
        if hasattr(values, "tolist"):
            values = values.tolist()
        insert = self.insert
        for x in values:
            insert(float(x))

    def delete(self, x: float):
        """Remove one occurrence of ``x``.

        Gamma and epoch are left untouched.

        Raises:
            UnderflowError: If the bucket of ``x`` under the current gamma is empty
        """
        key = self.key_for(x)
        try:
            self.store.remove(key)
        except UnderflowError:
            raise UnderflowError(
                f"cannot delete {x!r}: bucket {key} is empty at epoch {self.epoch}"
            ) from None

    def enforce_size(self) -> int:
        """Run the configured collapse until at most ``m`` buckets remain.

        Returns:
            Number of collapse rounds performed
        """
        rounds = 0
        while len(self.store) > self.config.m:
            self.collapse_once()
            rounds += 1
        return rounds

    def collapse_once(self):
        """Apply one collapse of the configured policy."""
        policy = self.config.policy
        if policy is CollapsePolicy.UNIFORM:
            self.uniform_collapse()
        elif policy is CollapsePolicy.COLLAPSE_FIRST:
            self.dd_collapse("first")
        else:
            self.dd_collapse("last")

    def uniform_collapse(self):
        """Merge buckets two by two (key ``i`` -> ``ceil(i/2)``) and square gamma.

        Legal on an empty sketch: the epoch still advances, which lets epoch
        alignment raise an empty sketch to any target epoch.

        Raises:
            RangeOverflowError: If the squared gamma is not a finite double. The
                sketch is left untouched, but it can no longer absorb its input
                and should be discarded.
        """
        squared = self.gamma * self.gamma
        if not math.isfinite(squared):
            raise RangeOverflowError(
                f"uniform collapse at epoch {self.epoch} would overflow gamma {self.gamma:.6g}"
            )
        self.store.halve_keys()
        self._set_gamma(squared)
        self.epoch += 1
        self.collapses += 1
        logger.debug(
            f"[COLLAPSE] uniform -> epoch {self.epoch}, gamma {self.gamma:.6g}, "
            f"{len(self.store)} buckets"
        )

    def dd_collapse(self, end: str = "first"):
        """Fold the two extreme buckets at ``end`` (``first`` or ``last``) into one.

        ``first`` adds the smallest bucket into the second smallest; ``last`` adds
        the second largest into the largest. Gamma does not change.

        Raises:
            SketchStateError: If fewer than two buckets are stored
        """
        if len(self.store) < 2:
            raise SketchStateError(
                f"dd_collapse needs at least two buckets, sketch has {len(self.store)}"
            )
        if end == "first":
            self.store.collapse_lowest()
        elif end == "last":
            self.store.collapse_highest()
        else:
            raise ParameterError(f"end must be 'first' or 'last', got {end!r}")
        self.collapses += 1

    def quantile(self, q: float) -> float:
        """Estimate the lower q-quantile.

        The target rank is ``floor(1 + q * (n - 1))``; the answer is the
        representative value of the first bucket, in ascending key order, whose
        cumulative count reaches it.

        Raises:
            ParameterError: If q is outside [0, 1]
            SketchStateError: If the sketch is empty
            RangeOverflowError: If the selected bucket estimate is not a finite positive double
        """
        if self.store.total == 0:
            raise SketchStateError("cannot query an empty sketch")
        rank = quantile_rank(q, self.store.total)
        return value_estimate(self.store.key_at_rank(rank), self.gamma)

    def quantiles(self, qs: Iterable[float]) -> List[float]:
        return [self.quantile(q) for q in qs]

    def satisfies_gamma_bound(self) -> bool:
        """Check gamma against ``(max_seen/min_seen) ** (2/(m-1))``; vacuous at epoch 0."""
        if self.epoch == 0 or self.min_seen is None:
            return True
        return self.gamma <= gamma_bound(self.min_seen, self.max_seen, self.config.m)

    def observe_extremes(self, min_seen: Optional[float], max_seen: Optional[float]):
        """Widen the tracked extremes to cover another range."""
        if min_seen is not None and (self.min_seen is None or min_seen < self.min_seen):
            self.min_seen = min_seen
        if max_seen is not None and (self.max_seen is None or max_seen > self.max_seen):
            self.max_seen = max_seen

    def copy(self) -> "QuantileSketch":
        clone = QuantileSketch(self.config)
        clone.store = self.store.copy()
        clone.epoch = self.epoch
        clone._set_gamma(self.gamma)
        clone.collapses = self.collapses
        clone.min_seen = self.min_seen
        clone.max_seen = self.max_seen
        return clone

    def summary(self) -> Dict[str, Any]:
        """JSON-ready description of the sketch state."""
        return {
            "policy": self.config.policy.value,
            "alpha0": self.config.alpha0,
            "m": self.config.m,
            "n": self.n,
            "epoch": self.epoch,
            "gamma": self.gamma,
            "alpha_final": self.alpha,
            "buckets": self.size,
            "collapses": self.collapses,
            "min_seen": self.min_seen,
            "max_seen": self.max_seen,
        }


class TwoSidedSketch:
    """Sketch over all reals: positives, negated negatives and an exact zero count."""

    def __init__(self, config: SketchConfig):
        self.config = config
        self.positive = QuantileSketch(config)
        self.negative = QuantileSketch(config)
        self.zero_count = 0

    def __repr__(self):
        return (
            f"TwoSidedSketch(negative={self.negative.n}, zero={self.zero_count}, "
            f"positive={self.positive.n})"
        )

    def __eq__(self, other) -> bool:
        if not isinstance(other, TwoSidedSketch):
            return NotImplemented
        return (
            self.positive == other.positive
            and self.negative == other.negative
            and self.zero_count == other.zero_count
        )

    @property
    def n(self) -> int:
        return self.positive.n + self.negative.n + self.zero_count

    def insert(self, x: float):
        if x > 0.0:
            self.positive.insert(x)
        elif x < 0.0:
            self.negative.insert(-x)
        elif x == 0.0:
            self.zero_count += 1
        else:
            raise DomainError(f"cannot insert {x!r}")

    def update(self, values: Iterable[float]):
        for x in values:
            self.insert(float(x))

    def delete(self, x: float):
        if x > 0.0:
            self.positive.delete(x)
        elif x < 0.0:
            self.negative.delete(-x)
        elif x == 0.0:
            if self.zero_count == 0:
                raise UnderflowError("cannot delete 0: no zero items stored")
            self.zero_count -= 1
        else:
            raise DomainError(f"cannot delete {x!r}")

    def quantile(self, q: float) -> float:
        """Lower q-quantile over negatives (ascending value), zeros, then positives."""
        total = self.n
        if total == 0:
            raise SketchStateError("cannot query an empty sketch")
        rank = quantile_rank(q, total)
        negatives = self.negative.n
        if rank <= negatives:
            # ascending values on the negative side means descending keys
            key = self.negative.store.reversed_key_at_rank(rank)
            return -value_estimate(key, self.negative.gamma)
        if rank <= negatives + self.zero_count:
            return 0.0
        key = self.positive.store.key_at_rank(rank - negatives - self.zero_count)
        return value_estimate(key, self.positive.gamma)

    def quantiles(self, qs: Iterable[float]) -> List[float]:
        return [self.quantile(q) for q in qs]

    def copy(self) -> "TwoSidedSketch":
        clone = TwoSidedSketch(self.config)
        clone.positive = self.positive.copy()
        clone.negative = self.negative.copy()
        clone.zero_count = self.zero_count
        return clone
