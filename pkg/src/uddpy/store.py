"""Sparse bucket storage: integer key -> positive count."""

from bisect import bisect_left, insort
from typing import Dict, Iterable, Iterator, List, Optional, Tuple

from .exceptions import CountOverflowError, ParameterError, SketchStateError, UnderflowError
from .mapping import collapsed_key

MAX_COUNT = 2 ** 64 - 1


class BucketStore:
    """Hash map of bucket counts plus a sorted index of the live keys.

    Lookups, increments and decrements go through the dict in expected constant
    time. The sorted key list serves rank walks and the end-of-range collapses.
    A stored count is never zero: buckets are dropped when they empty.
    """

    __slots__ = ("_counts", "_keys", "_total")

    def __init__(self, items: Optional[Iterable[Tuple[int, int]]] = None):
        self._counts: Dict[int, int] = {}
        self._keys: List[int] = []
        self._total = 0
        if items is not None:
            for key, count in items:
                self.add(key, count)

    def __repr__(self):
        body = ", ".join(f"{k}: {self._counts[k]}" for k in self._keys)
        return f"BucketStore({{{body}}})"

    def __len__(self) -> int:
        return len(self._keys)

    def __contains__(self, key: int) -> bool:
        return key in self._counts

    def __iter__(self) -> Iterator[int]:
        return iter(self._keys)

    def __eq__(self, other) -> bool:
        if not isinstance(other, BucketStore):
            return NotImplemented
        return self._counts == other._counts

    @property
    def total(self) -> int:
        """Sum of all bucket counts."""
        return self._total

    def count(self, key: int) -> int:
        """Count stored for ``key`` (0 when absent)."""
        return self._counts.get(key, 0)

    def keys(self) -> List[int]:
        """Live keys in ascending order."""
        return list(self._keys)

    def items(self) -> List[Tuple[int, int]]:
        """(key, count) pairs in ascending key order."""
        counts = self._counts
        return [(k, counts[k]) for k in self._keys]

    def min_key(self) -> int:
        if not self._keys:
            raise SketchStateError("empty store has no minimum key")
        return self._keys[0]

    def max_key(self) -> int:
        if not self._keys:
            raise SketchStateError("empty store has no maximum key")
        return self._keys[-1]

    def add(self, key: int, count: int = 1):
        """Add ``count`` items to bucket ``key``, creating the bucket if needed.

        The store is unchanged when an error is raised.

        Raises:
            ParameterError: If count is not positive
            CountOverflowError: If the bucket or the total would exceed 64 bits
        """
        if count <= 0:
            raise ParameterError(f"count must be positive, got {count}")
        current = self._counts.get(key)
        updated = count if current is None else current + count
        if updated > MAX_COUNT:
            raise CountOverflowError(f"bucket {key} count exceeds 64 bits")
        total = self._total + count
        if total > MAX_COUNT:
            raise CountOverflowError("total count exceeds 64 bits")
        if current is None:
            insort(self._keys, key)
        self._counts[key] = updated
        self._total = total

    def remove(self, key: int, count: int = 1):
        """Remove ``count`` items from bucket ``key``; the bucket is discarded at zero.

        Raises:
            UnderflowError: If the bucket is absent or holds fewer than ``count`` items
        """
        current = self._counts.get(key, 0)
        if current < count:
            raise UnderflowError(
                f"cannot remove {count} item(s) from bucket {key} holding {current}"
            )
        if current == count:
            del self._counts[key]
            del self._keys[bisect_left(self._keys, key)]
        else:
            self._counts[key] = current - count
        self._total -= count

    def key_at_rank(self, rank: int) -> int:
        """Smallest key whose cumulative count (ascending) reaches ``rank``."""
        running = 0
        counts = self._counts
        for key in self._keys:
            running += counts[key]
            if running >= rank:
                return key
        raise SketchStateError(f"rank {rank} exceeds total count {self._total}")

    def reversed_key_at_rank(self, rank: int) -> int:
        """Largest key whose cumulative count (descending) reaches ``rank``."""
        running = 0
        counts = self._counts
        for key in reversed(self._keys):
            running += counts[key]
            if running >= rank:
                return key
        raise SketchStateError(f"rank {rank} exceeds total count {self._total}")

    def collapse_lowest(self):
        """Fold the smallest bucket into the second smallest."""
        if len(self._keys) < 2:
            raise SketchStateError("collapse needs at least two buckets")
        low = self._keys.pop(0)
        self._counts[self._keys[0]] += self._counts.pop(low)

    def collapse_highest(self):
        """Fold the second largest bucket into the largest."""
        if len(self._keys) < 2:
            raise SketchStateError("collapse needs at least two buckets")
        second = self._keys.pop(-2)
        self._counts[self._keys[-1]] += self._counts.pop(second)

    def halve_keys(self):
        """Remap every key ``i`` to ``ceil(i / 2)``, summing colliding buckets."""
        counts = self._counts
        remapped: Dict[int, int] = {}
        keys: List[int] = []
        # ceil(i/2) is monotone, so the new keys come out already sorted
        for key in self._keys:
            target = collapsed_key(key)
            if target in remapped:
                remapped[target] += counts[key]
            else:
                remapped[target] = counts[key]
                keys.append(target)
        self._counts = remapped
        self._keys = keys

    def merge_from(self, other: "BucketStore") -> int:
        """Add every bucket of ``other`` into this store.

        Returns:
            Number of buckets read from ``other``
        """
        for key, count in other.items():
            self.add(key, count)
        return len(other)

    def copy(self) -> "BucketStore":
        clone = BucketStore()
        clone._counts = dict(self._counts)
        clone._keys = list(self._keys)
        clone._total = self._total
        return clone
