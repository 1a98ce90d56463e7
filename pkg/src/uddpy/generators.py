"""Seeded, reproducible synthetic streams.

Every stream is driven by a counter-mode SplitMix64 generator: the k-th 64-bit
output (k = 1, 2, ...) is the SplitMix64 finaliser applied to
``seed + k * 0x9E3779B97F4A7C15 (mod 2**64)``::

    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB
    z =  z ^ (z >> 31)

Uniform doubles in [0, 1) take the top 53 bits: ``(z >> 11) * 2**-53``.
Candidates are consumed strictly in counter order, so a stream of length n is
a prefix of the same stream of any larger length, and any implementation
following the algorithms below reproduces it bit for bit:

- uniform(lo, hi):      lo + (hi - lo) * u
- exponential(rate):    -log1p(-u) / rate                        (inverse CDF)
- normal(mean, sd):     Marsaglia polar method on consecutive uniform pairs
- lognormal(mu, sigma): exp(mu + sigma * z), z from the polar method
- beta(a, b):           Johnk's method on consecutive uniform pairs

Draws that are not finite and strictly positive are rejected and counted.
"""

import logging
import random
from dataclasses import dataclass
from math import exp, lgamma
from typing import Callable, Dict, List, Sequence, Tuple

import numpy as np

from .exceptions import ParameterError

logger = logging.getLogger(__name__)

GOLDEN_GAMMA = 0x9E3779B97F4A7C15
MIX_1 = 0xBF58476D1CE4E5B9
MIX_2 = 0x94D049BB133111EB
_MASK = 2 ** 64 - 1
_DOUBLE_UNIT = 2.0 ** -53
_MIN_BATCH = 4096
_MAX_ROUNDS = 1000


class SplitMix64:
    """Counter-mode SplitMix64 producing numpy batches."""

    def __init__(self, seed: int):
        self.seed = seed & _MASK
        self.counter = 0

    def next_uint64(self, count: int) -> np.ndarray:
        """Return the next ``count`` raw 64-bit outputs."""
        with np.errstate(over="ignore"):
            k = np.arange(self.counter + 1, self.counter + count + 1, dtype=np.uint64)
            z = np.uint64(self.seed) + k * np.uint64(GOLDEN_GAMMA)
            z = (z ^ (z >> np.uint64(30))) * np.uint64(MIX_1)
            z = (z ^ (z >> np.uint64(27))) * np.uint64(MIX_2)
            z = z ^ (z >> np.uint64(31))
        self.counter += count
        return z

    def uniforms(self, count: int) -> np.ndarray:
        """Return the next ``count`` doubles in [0, 1)."""
        return (self.next_uint64(count) >> np.uint64(11)).astype(np.float64) * _DOUBLE_UNIT


def _polar_normals(rng: SplitMix64, pairs: int) -> np.ndarray:
    u = rng.uniforms(2 * pairs)
    v1 = 2.0 * u[0::2] - 1.0
    v2 = 2.0 * u[1::2] - 1.0
    s = v1 * v1 + v2 * v2
    keep = (s > 0.0) & (s < 1.0)
    v1, v2, s = v1[keep], v2[keep], s[keep]
    factor = np.sqrt(-2.0 * np.log(s) / s)
    # each accepted pair yields two normals, emitted in pair order
    out = np.empty(2 * v1.size, dtype=np.float64)
    out[0::2] = v1 * factor
    out[1::2] = v2 * factor
    return out


def _uniform(rng: SplitMix64, params: Sequence[float], wanted: int) -> np.ndarray:
    lo, hi = params
    return lo + (hi - lo) * rng.uniforms(max(wanted, _MIN_BATCH))


def _exponential(rng: SplitMix64, params: Sequence[float], wanted: int) -> np.ndarray:
    (rate,) = params
    return -np.log1p(-rng.uniforms(max(wanted, _MIN_BATCH))) / rate


def _normal(rng: SplitMix64, params: Sequence[float], wanted: int) -> np.ndarray:
    mean, sd = params
    # polar acceptance is pi/4 per pair, two normals per accepted pair
    return mean + sd * _polar_normals(rng, max(wanted // 2 + wanted // 8 + 1, _MIN_BATCH))


def _lognormal(rng: SplitMix64, params: Sequence[float], wanted: int) -> np.ndarray:
    meanlog, sdlog = params
    z = _polar_normals(rng, max(wanted // 2 + wanted // 8 + 1, _MIN_BATCH))
    with np.errstate(over="ignore"):
        return np.exp(meanlog + sdlog * z)


def _beta(rng: SplitMix64, params: Sequence[float], wanted: int) -> np.ndarray:
    a, b = params
    pairs = max(int(wanted * 1.2 / _johnk_acceptance(a, b)) + 1, _MIN_BATCH)
    u = rng.uniforms(2 * pairs)
    with np.errstate(divide="ignore", invalid="ignore", under="ignore"):
        x = u[0::2] ** (1.0 / a)
        y = u[1::2] ** (1.0 / b)
        total = x + y
        keep = (total <= 1.0) & (total > 0.0)
        return x[keep] / total[keep]


def _johnk_acceptance(a: float, b: float) -> float:
    """Probability that a Johnk candidate pair is accepted, Gamma(a+1)Gamma(b+1)/Gamma(a+b+1)."""
    return max(exp(lgamma(a + 1.0) + lgamma(b + 1.0) - lgamma(a + b + 1.0)), 1e-6)


def _check_uniform(params: Sequence[float]):
    lo, hi = params
    if not lo < hi:
        raise ParameterError(f"uniform needs lo < hi, got ({lo}, {hi})")
    if hi <= 0.0:
        raise ParameterError("uniform support must reach positive values")


def _check_positive(names: Sequence[str]) -> Callable[[Sequence[float]], None]:
    def check(params: Sequence[float]):
        for name, value in zip(names, params):
            if not value > 0.0:
                raise ParameterError(f"{name} must be positive, got {value}")

    return check


def _check_scale_second(params: Sequence[float]):
    if not params[1] > 0.0:
        raise ParameterError(f"standard deviation must be positive, got {params[1]}")


def _check_normal(params: Sequence[float]):
    _check_scale_second(params)
    mean, sd = params
    if not mean + 8.0 * sd > 0.0:
        raise ParameterError(
            f"normal({mean:g}, {sd:g}) puts almost no mass on positive values"
        )


@dataclass(frozen=True)
class Distribution:
    name: str
    param_names: Tuple[str, ...]
    check: Callable[[Sequence[float]], None]
    sampler: Callable[[SplitMix64, Sequence[float], int], np.ndarray]


DISTRIBUTIONS: Dict[str, Distribution] = {
    "beta": Distribution("beta", ("a", "b"), _check_positive(("a", "b")), _beta),
    "exponential": Distribution("exponential", ("rate",), _check_positive(("rate",)), _exponential),
    "lognormal": Distribution("lognormal", ("meanlog", "sdlog"), _check_scale_second, _lognormal),
    "normal": Distribution("normal", ("mean", "sd"), _check_normal, _normal),
    "uniform": Distribution("uniform", ("lo", "hi"), _check_uniform, _uniform),
}


def parse_params(text: str) -> Tuple[float, ...]:
    """Parse a comma-separated parameter list such as ``"5,1000000"``."""
    try:
        return tuple(float(part) for part in text.split(",") if part.strip())
    except ValueError:
        raise ParameterError(f"distribution parameters must be numbers, got {text!r}") from None


@dataclass(frozen=True)
class StreamSpec:
    """Everything needed to regenerate a synthetic stream.

    Attributes:
        dist: Distribution name (beta, exponential, lognormal, normal, uniform)
        params: Distribution parameters in the order of ``DISTRIBUTIONS[dist].param_names``
        n: Number of values
        seed: 64-bit seed
    """

    dist: str
    params: Tuple[float, ...]
    n: int
    seed: int = 0

    def __post_init__(self):
        if self.dist not in DISTRIBUTIONS:
            raise ParameterError(
                f"unknown distribution {self.dist!r}; expected one of {sorted(DISTRIBUTIONS)}"
            )
        object.__setattr__(self, "params", tuple(float(p) for p in self.params))
        distribution = DISTRIBUTIONS[self.dist]
        if len(self.params) != len(distribution.param_names):
            raise ParameterError(
                f"{self.dist} takes parameters {distribution.param_names}, got {self.params}"
            )
        distribution.check(self.params)
        if self.n < 0:
            raise ParameterError(f"stream length must be non-negative, got {self.n}")

    def label(self) -> str:
        return f"{self.dist}({','.join(f'{p:g}' for p in self.params)})"

    def to_dict(self) -> Dict[str, object]:
        return {"dist": self.dist, "params": list(self.params), "n": self.n, "seed": self.seed}


@dataclass
class GeneratedStream:
    values: np.ndarray
    rejected: int


def generate_stream_detailed(spec: StreamSpec) -> GeneratedStream:
    """Generate the stream and report how many non-positive draws were rejected.

    Raises:
        ParameterError: If the sampler keeps missing positive values for ``_MAX_ROUNDS`` batches
    """
    distribution = DISTRIBUTIONS[spec.dist]
    rng = SplitMix64(spec.seed)
    parts: List[np.ndarray] = []
    have = 0
    rejected = 0
    rounds = 0
    while have < spec.n:
        if rounds == _MAX_ROUNDS:
            raise ParameterError(
                f"{spec.label()}: only {have} of {spec.n} positive draws after {rounds} rounds"
            )
        rounds += 1
        candidates = distribution.sampler(rng, spec.params, spec.n - have)
        keep = np.isfinite(candidates) & (candidates > 0.0)
        rejected += int(candidates.size - np.count_nonzero(keep))
        accepted = candidates[keep]
        parts.append(accepted)
        have += accepted.size
    values = np.concatenate(parts)[: spec.n] if parts else np.empty(0, dtype=np.float64)
    if rejected:
        logger.warning(f"[GENERATE] {spec.label()}: rejected {rejected} non-positive draws")
    return GeneratedStream(values=values, rejected=rejected)


def generate_stream(spec: StreamSpec) -> np.ndarray:
    """Deterministic value sequence for ``spec``: same seed and n give identical bytes."""
    return generate_stream_detailed(spec).values


def generate_interleaved_ops(
    values: Sequence[float], delete_fraction: float, seed: int
) -> Tuple[List[Tuple[str, float]], List[float]]:
    """Interleave deletions of surviving items into an insertion stream.

    After each insertion, with probability ``delete_fraction`` one uniformly
    chosen survivor is deleted.

    Returns:
        (operations, survivors): operations as ("insert"|"delete", value) pairs,
        and the net multiset left after all operations
    """
    if not 0.0 <= delete_fraction <= 1.0:
        raise ParameterError(f"delete_fraction must lie in [0, 1], got {delete_fraction}")
    rng = random.Random(seed)
    survivors: List[float] = []
    ops: List[Tuple[str, float]] = []
    for x in values:
        x = float(x)
        ops.append(("insert", x))
        survivors.append(x)
        if rng.random() < delete_fraction:
            i = rng.randrange(len(survivors))
            survivors[i], survivors[-1] = survivors[-1], survivors[i]
            ops.append(("delete", survivors.pop()))
    return ops, survivors
