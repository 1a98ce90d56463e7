"""Exception hierarchy shared by every uddpy module."""

from typing import Optional


class SketchError(Exception):
    """Base class for all uddpy errors."""


class ParameterError(SketchError, ValueError):
    """A numeric or structural parameter is outside its legal range."""


class DomainError(SketchError, ValueError):
    """An item cannot be placed in a one-sided sketch (zero, negative, NaN or infinite)."""


class UnderflowError(SketchError):
    """A delete targeted a bucket that holds no items."""


class SketchStateError(SketchError):
    """The operation is not legal for the sketch's current contents."""


class IncompatibleSketchError(SketchError):
    """Two sketches cannot be aligned or merged.

    Attributes:
        field: Name of the mismatched configuration field (``alpha0``, ``m``,
            ``policy`` or ``epoch``), or None when unknown.
    """

    def __init__(self, message: str, field: Optional[str] = None):
        super().__init__(message)
        self.field = field


class CountOverflowError(SketchError, OverflowError):
    """A bucket count or the item total no longer fits in 64 unsigned bits."""


class RangeOverflowError(SketchError, OverflowError):
    """Gamma or a bucket estimate no longer fits in a finite, nonzero double."""


class CodecError(SketchError):
    """Base class for serialization failures."""


class FormatError(CodecError):
    """Bad magic, version or enum byte."""


class CorruptionError(CodecError):
    """The payload decodes but violates a sketch invariant."""


class TruncatedDataError(CodecError):
    """The payload is shorter than its declared structure."""


class ConsistencyError(SketchError):
    """A sketch and the dataset it is evaluated against do not describe the same items."""
