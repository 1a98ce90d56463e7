"""Logarithmic bucket math: the mapping between values, bucket keys and gamma.

Bucket ``i`` under base ``gamma`` covers the half-open interval
``(gamma**(i-1), gamma**i]``. Every sketch in the package derives its keys and
its value estimates from the functions in this module, so that two sketches
built under the same gamma bit pattern always agree on every key.
"""

import math

from .exceptions import DomainError, ParameterError, RangeOverflowError


def gamma_from_alpha(alpha: float) -> float:
    """Return the bucket base ``(1 + alpha) / (1 - alpha)`` for a relative accuracy.

    Args:
        alpha: Relative accuracy target, strictly between 0 and 1

    Returns:
        The gamma value, always greater than 1

    Raises:
        ParameterError: If alpha is outside (0, 1)
    """
    if not 0.0 < alpha < 1.0:
        raise ParameterError(f"alpha must lie in (0, 1), got {alpha!r}")
    return (1.0 + alpha) / (1.0 - alpha)


def alpha_from_gamma(gamma: float) -> float:
    """Return the relative accuracy ``(gamma - 1) / (gamma + 1)`` guaranteed by a bucket base.

    Raises:
        ParameterError: If gamma is not greater than 1
    """
    if not gamma > 1.0:
        raise ParameterError(f"gamma must be greater than 1, got {gamma!r}")
    return (gamma - 1.0) / (gamma + 1.0)


def gamma_for_epoch(alpha0: float, epoch: int) -> float:
    """Return the gamma reached after ``epoch`` uniform collapses.

    The value is produced by squaring ``gamma_from_alpha(alpha0)`` exactly
    ``epoch`` times, which is the same sequence of float operations a sketch
    performs while collapsing. Sketches rebuilt from (alpha0, epoch) therefore
    carry the identical gamma bit pattern.

    Raises:
        ParameterError: If epoch is negative
        RangeOverflowError: If gamma leaves the double range before ``epoch`` squarings
    """
    if epoch < 0:
        raise ParameterError(f"epoch must be non-negative, got {epoch}")
    gamma = gamma_from_alpha(alpha0)
    for _ in range(epoch):
        gamma = gamma * gamma
        if not math.isfinite(gamma):
            raise RangeOverflowError(f"gamma overflows a double before epoch {epoch}")
    return gamma


def bucket_index(x: float, gamma: float) -> int:
    """Return the key ``ceil(ln x / ln gamma)`` of the bucket holding ``x``.

    The key is computed in double precision with no epsilon correction, so
    values within round-off of a bucket boundary may land on either side of
    it. For a fixed (x, gamma) bit pattern the result is deterministic.

    Raises:
        DomainError: If x is not a finite positive number
        ParameterError: If gamma is not greater than 1
    """
    if not 0.0 < x < math.inf:
        raise DomainError(f"bucket_index requires a finite positive value, got {x!r}")
    if not gamma > 1.0:
        raise ParameterError(f"gamma must be greater than 1, got {gamma!r}")
    return math.ceil(math.log(x) / math.log(gamma))


def value_estimate(i: int, gamma: float) -> float:
    """Return the representative value ``2 * gamma**i / (gamma + 1)`` of bucket ``i``.

    The estimate has the same worst-case relative error towards both bucket
    ends, namely ``alpha_from_gamma(gamma)``.

    Raises:
        ParameterError: If gamma is not greater than 1
        RangeOverflowError: If the estimate is not a finite positive double
    """
    if not gamma > 1.0:
        raise ParameterError(f"gamma must be greater than 1, got {gamma!r}")
    try:
        estimate = 2.0 * gamma ** i / (gamma + 1.0)
    except OverflowError:
        estimate = math.inf
    if estimate == math.inf:
        # gamma**i alone overflows while the estimate itself may still fit
        try:
            estimate = 2.0 * gamma ** (i - 1) * (gamma / (gamma + 1.0))
        except OverflowError:
            estimate = math.inf
    if not 0.0 < estimate < math.inf:
        raise RangeOverflowError(f"estimate of bucket {i} under gamma {gamma!r} is out of range")
    return estimate


def quantile_rank(q: float, n: int) -> int:
    """Return the 1-based rank ``floor(1 + q * (n - 1))`` of the lower q-quantile.

    Raises:
        ParameterError: If q is outside [0, 1] or n is not positive
    """
    if not 0.0 <= q <= 1.0:
        raise ParameterError(f"q must lie in [0, 1], got {q!r}")
    if n < 1:
        raise ParameterError(f"rank requires at least one item, got n={n}")
    return math.floor(1 + q * (n - 1))


def collapsed_key(i: int) -> int:
    """Return ``ceil(i / 2)``, the key bucket ``i`` moves to in a uniform collapse."""
    return -((-i) // 2)
