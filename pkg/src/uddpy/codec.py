"""Binary and text serialization of sketches, plus the UDDV data-file format.

Sketch envelope (``.udds``), all fields little-endian::

    magic "UDDS" | version u8 | policy u8 | alpha0 f64 | m u32 | epoch u32 |
    n u64 | bucket_count u32 | bucket_count x (key i64, count u64) |
    min_seen f64 | max_seen f64

Keys are written in ascending order, which makes the encoding canonical:
equal sketches produce equal bytes. Absent extremes are written as NaN.

Data file (``UDDV``)::

    magic "UDDV" | version u8 | 3 reserved zero bytes | n u64 |
    n x f64 | n u64 (trailer, must repeat the header count)
"""

import json
import math
import os
import struct
import tempfile
from pathlib import Path
from typing import Any, Dict, Iterable, Union

import numpy as np

from .exceptions import (
    CorruptionError,
    FormatError,
    ParameterError,
    RangeOverflowError,
    TruncatedDataError,
)
from .sketch import CollapsePolicy, QuantileSketch, SketchConfig
from .store import MAX_COUNT

SKETCH_MAGIC = b"UDDS"
SKETCH_VERSION = 1
DATA_MAGIC = b"UDDV"
DATA_VERSION = 1
SKETCH_EXTENSION = ".udds"

_HEADER = struct.Struct("<4sBBdIIQI")
_RECORD = struct.Struct("<qQ")
_EXTREMES = struct.Struct("<dd")
_DATA_HEADER = struct.Struct("<4sB3xQ")
_DATA_TRAILER = struct.Struct("<Q")

PathLike = Union[str, os.PathLike]


def _extreme(value) -> float:
    return math.nan if value is None else float(value)


def _optional(value: float):
    return None if math.isnan(value) else value


def encode(sketch: QuantileSketch) -> bytes:
    """Serialize a sketch into its canonical binary envelope."""
    config = sketch.config
    buckets = sketch.buckets()
    header = _HEADER.pack(
        SKETCH_MAGIC,
        SKETCH_VERSION,
        config.policy.code,
        config.alpha0,
        config.m,
        sketch.epoch,
        sketch.n,
        len(buckets),
    )
    records = b"".join(_RECORD.pack(key, count) for key, count in buckets)
    extremes = _EXTREMES.pack(_extreme(sketch.min_seen), _extreme(sketch.max_seen))
    return header + records + extremes


def decode(data: bytes) -> QuantileSketch:
    """Rebuild a sketch from its binary envelope, validating every invariant.

    Raises:
        FormatError: Bad magic, version or policy byte
        TruncatedDataError: Payload shorter than the declared structure
        CorruptionError: Invariant violation (ordering, zero counts, count sum, size, epoch)
    """
    data = bytes(data)
    if len(data) < _HEADER.size:
        raise TruncatedDataError(
            f"sketch envelope needs at least {_HEADER.size} bytes, got {len(data)}"
        )
    magic, version, policy_code, alpha0, m, epoch, n, bucket_count = _HEADER.unpack_from(data)
    if magic != SKETCH_MAGIC:
        raise FormatError(f"bad sketch magic {magic!r}")
    if version != SKETCH_VERSION:
        raise FormatError(f"unsupported sketch version {version}")
    try:
        policy = CollapsePolicy.from_code(policy_code)
    except ValueError as e:
        raise FormatError(str(e)) from None

    expected = _HEADER.size + bucket_count * _RECORD.size + _EXTREMES.size
    if len(data) < expected:
        raise TruncatedDataError(f"sketch envelope declares {expected} bytes, got {len(data)}")
    if len(data) > expected:
        raise CorruptionError(f"{len(data) - expected} trailing bytes after sketch envelope")

    try:
        config = SketchConfig(alpha0=alpha0, m=m, policy=policy)
    except ParameterError as e:
        raise CorruptionError(f"invalid sketch parameters: {e}") from None
    if bucket_count > m:
        raise CorruptionError(f"{bucket_count} buckets exceed the limit m={m}")
    if epoch and policy is not CollapsePolicy.UNIFORM:
        raise CorruptionError(f"{policy.value} sketch cannot carry epoch {epoch}")

    buckets = []
    previous = None
    total = 0
    offset = _HEADER.size
    for _ in range(bucket_count):
        key, count = _RECORD.unpack_from(data, offset)
        offset += _RECORD.size
        if previous is not None and key <= previous:
            raise CorruptionError(f"bucket keys not strictly increasing at key {key}")
        if count == 0:
            raise CorruptionError(f"bucket {key} has a zero count")
        previous = key
        total += count
        buckets.append((key, count))
    if total != n or total > MAX_COUNT:
        raise CorruptionError(f"bucket counts sum to {total}, header declares n={n}")

    min_seen, max_seen = _EXTREMES.unpack_from(data, offset)
    try:
        return QuantileSketch.restore(
            config, epoch, buckets, _optional(min_seen), _optional(max_seen)
        )
    except RangeOverflowError as e:
        raise CorruptionError(f"epoch {epoch} is unreachable from alpha0={alpha0}: {e}") from None


def to_text(sketch: QuantileSketch) -> str:
    """Debugging JSON form of the envelope; the binary form is authoritative."""
    document = {
        "magic": SKETCH_MAGIC.decode(),
        "version": SKETCH_VERSION,
        "policy": sketch.config.policy.value,
        "alpha0": sketch.config.alpha0,
        "m": sketch.config.m,
        "epoch": sketch.epoch,
        "n": sketch.n,
        "bucket_count": sketch.size,
        "buckets": [[key, count] for key, count in sketch.buckets()],
        "min_seen": sketch.min_seen,
        "max_seen": sketch.max_seen,
    }
    return json.dumps(document, indent=2)


def from_text(text: str) -> QuantileSketch:
    """Parse the JSON form produced by ``to_text``."""
    try:
        document: Dict[str, Any] = json.loads(text)
        config = SketchConfig(
            alpha0=float(document["alpha0"]),
            m=int(document["m"]),
            policy=document["policy"],
        )
        buckets = [(int(k), int(c)) for k, c in document["buckets"]]
        epoch = int(document["epoch"])
        n = int(document["n"])
        sketch = QuantileSketch.restore(
            config, epoch, buckets, document.get("min_seen"), document.get("max_seen")
        )
    except (KeyError, TypeError, ValueError) as e:
        raise FormatError(f"malformed sketch text: {e}") from None
    except RangeOverflowError as e:
        raise CorruptionError(f"sketch text epoch is unreachable: {e}") from None
    if sketch.n != n or sketch.size != len(buckets):
        raise CorruptionError("sketch text counts are inconsistent")
    return sketch


def encode_data(values: Iterable[float]) -> bytes:
    """Serialize a value sequence into the UDDV data-file format."""
    array = np.ascontiguousarray(np.asarray(values, dtype="<f8"))
    n = int(array.size)
    return _DATA_HEADER.pack(DATA_MAGIC, DATA_VERSION, n) + array.tobytes() + _DATA_TRAILER.pack(n)


def decode_data(data: bytes) -> np.ndarray:
    """Parse a UDDV payload into a float64 array."""
    if len(data) < _DATA_HEADER.size + _DATA_TRAILER.size:
        raise TruncatedDataError(f"data file too short ({len(data)} bytes)")
    magic, version, n = _DATA_HEADER.unpack_from(data)
    if magic != DATA_MAGIC:
        raise FormatError(f"bad data file magic {magic!r}")
    if version != DATA_VERSION:
        raise FormatError(f"unsupported data file version {version}")
    expected = _DATA_HEADER.size + 8 * n + _DATA_TRAILER.size
    if len(data) < expected:
        raise TruncatedDataError(f"data file declares {n} values but holds {len(data)} bytes")
    if len(data) > expected:
        raise CorruptionError(f"{len(data) - expected} trailing bytes in data file")
    (trailer,) = _DATA_TRAILER.unpack_from(data, expected - _DATA_TRAILER.size)
    if trailer != n:
        raise CorruptionError(f"data file trailer count {trailer} does not match header {n}")
    return np.frombuffer(data, dtype="<f8", count=n, offset=_DATA_HEADER.size).astype(np.float64)


def atomic_write(path: PathLike, payload: Union[bytes, str]):
    """Write ``payload`` to a temp file beside ``path`` and rename it into place."""
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    if isinstance(payload, str):
        payload = payload.encode("utf-8")
    fd, tmp_name = tempfile.mkstemp(prefix=f".{target.name}.", dir=str(target.parent))
    try:
        with os.fdopen(fd, "wb") as handle:
            handle.write(payload)
        os.replace(tmp_name, target)
    except BaseException:
        try:
            os.unlink(tmp_name)
        except OSError:
            pass
        raise


def write_sketch(path: PathLike, sketch: QuantileSketch):
    atomic_write(path, encode(sketch))


def read_sketch(path: PathLike) -> QuantileSketch:
    return decode(Path(path).read_bytes())


def write_data_file(path: PathLike, values: Iterable[float]):
    atomic_write(path, encode_data(values))


def read_data_file(path: PathLike) -> np.ndarray:
    return decode_data(Path(path).read_bytes())
