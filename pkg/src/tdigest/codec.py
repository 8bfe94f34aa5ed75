"""Binary wire format for digests.

Every image starts with a fixed 43-octet little-endian header::

    offset  size  field
    0       4     magic b"TDIG"
    4       1     version (1)
    5       1     encoding tag
    6       1     scale kind (0=k0 1=k1 2=k2 3=k3 4=k2u 5=k3u)
    7       8     delta          float64
    15      8     min            float64
    23      8     max            float64
    31      8     total weight   float64
    39      4     centroid count uint32

followed by a payload selected by the encoding tag:

* ``0`` FULL, float weights: ``count`` float64 means, then ``count`` float64 weights.
* ``2`` FULL, integer weights: ``count`` float64 means, then ``count`` uint32 weights.
  Chosen automatically by :data:`Encoding.FULL` when every weight is an
  integer that fits in 32 bits.
* ``1`` COMPACT: the first mean as float64, each following mean as a float32
  difference from the previously *decoded* mean, then every weight as an
  unsigned LEB128 varint.  Only integer weights can be stored this way.

Means are reconstructed by adding the float32 step to the running float64
value, so rounding does not accumulate along the digest.  Steps are rounded
toward zero when needed, which keeps the decoded means non-decreasing.
"""

from __future__ import annotations

import enum
import math
import struct

import numpy as np

from .digest import TDigest
from .exceptions import (
    BadMagicError,
    CodecError,
    MalformedImageError,
    NonMonotoneMeansError,
    TruncatedPayloadError,
    UnsupportedVersionError,
)
from .scale import ScaleFunction

__all__ = ["Encoding", "MAGIC", "VERSION", "HEADER", "encode", "decode", "encode_varint", "decode_varint"]

MAGIC = b"TDIG"
VERSION = 1
HEADER = struct.Struct("<4sBBBddddI")

_TAG_FULL_FLOAT = 0
_TAG_COMPACT = 1
_TAG_FULL_INT = 2
_U32_MAX = 2**32 - 1


class Encoding(enum.Enum):
    FULL = "full"
    COMPACT = "compact"


def encode_varint(value: int) -> bytes:
    if value < 0:
        raise CodecError(f"varints are unsigned, got {value}")
    out = bytearray()
    while True:
        byte = value & 0x7F
        value >>= 7
        if value:
            out.append(byte | 0x80)
        else:
            out.append(byte)
            return bytes(out)


def decode_varint(data, pos: int) -> tuple[int, int]:
    """Return ``(value, next_position)``."""
    value = 0
    shift = 0
    while True:
        if pos >= len(data):
            raise TruncatedPayloadError()
        byte = data[pos]
        pos += 1
        value |= (byte & 0x7F) << shift
        if not byte & 0x80:
            return value, pos
        shift += 7


def _integral(weights: np.ndarray) -> bool:
    return bool(np.all(weights == np.floor(weights)))


def encode(digest: TDigest, encoding: Encoding | str = Encoding.FULL) -> bytes:
    encoding = Encoding(encoding) if not isinstance(encoding, Encoding) else encoding
    means = digest.means
    weights = digest.weights
    count = means.size

    if encoding is Encoding.COMPACT:
        if not _integral(weights):
            raise CodecError("COMPACT encoding needs integer weights; use FULL for fractional weights")
        tag = _TAG_COMPACT
    elif _integral(weights) and (count == 0 or weights.max() <= _U32_MAX):
        tag = _TAG_FULL_INT
    else:
        tag = _TAG_FULL_FLOAT

    header = HEADER.pack(
        MAGIC, VERSION, tag, digest.scale.code,
        digest.delta, digest.min, digest.max, digest.total_weight, count,
    )
    if tag == _TAG_FULL_FLOAT:
        return header + means.astype("<f8").tobytes() + weights.astype("<f8").tobytes()
    if tag == _TAG_FULL_INT:
        return header + means.astype("<f8").tobytes() + weights.astype("<u4").tobytes()

    parts = [header]
    if count:
        steps = np.empty(count - 1, dtype="<f4")
        current = float(means[0])
        for i in range(1, count):
            step = np.float32(means[i] - current)
            # round toward the previous mean so the decoded sequence never steps backwards
            if current + float(step) > means[i]:
                step = np.nextafter(step, np.float32(0))
            steps[i - 1] = step
            current = current + float(step)
        parts.append(struct.pack("<d", means[0]))
        parts.append(steps.tobytes())
        parts.extend(encode_varint(int(w)) for w in weights)
    return b"".join(parts)


def _take(data, pos: int, size: int) -> int:
    if pos + size > len(data):
        raise TruncatedPayloadError()
    return pos + size


def decode(image: bytes) -> TDigest:
    data = bytes(image)
    if len(data) < 4 or data[:4] != MAGIC:
        raise BadMagicError(f"bad magic {data[:4]!r}, expected {MAGIC!r}")
    if len(data) < 5:
        raise TruncatedPayloadError()
    if data[4] != VERSION:
        raise UnsupportedVersionError(f"unsupported version {data[4]}")
    if len(data) < HEADER.size:
        raise TruncatedPayloadError()
    _, _, tag, kind, delta, xmin, xmax, total, count = HEADER.unpack_from(data)
    if tag not in (_TAG_FULL_FLOAT, _TAG_COMPACT, _TAG_FULL_INT):
        raise MalformedImageError(f"unknown encoding tag {tag}")
    try:
        scale = ScaleFunction.from_code(kind)
    except KeyError:
        raise MalformedImageError(f"unknown scale kind {kind}") from None

    pos = HEADER.size
    if tag == _TAG_COMPACT:
        if count:
            end = _take(data, pos, 8 + 4 * (count - 1))
            first = struct.unpack_from("<d", data, pos)[0]
            steps = np.frombuffer(data, dtype="<f4", count=count - 1, offset=pos + 8)
            if np.any(steps < 0):
                raise NonMonotoneMeansError("decoded means are not non-decreasing")
            means = np.empty(count)
            current = first
            means[0] = current
            for i, step in enumerate(steps.tolist(), start=1):
                current = current + step
                means[i] = current
            pos = end
            weights = np.empty(count)
            for i in range(count):
                value, pos = decode_varint(data, pos)
                weights[i] = value
        else:
            means = weights = np.empty(0)
    else:
        wsize = 8 if tag == _TAG_FULL_FLOAT else 4
        end = _take(data, pos, count * (8 + wsize))
        means = np.frombuffer(data, dtype="<f8", count=count, offset=pos).astype(np.float64)
        wtype = "<f8" if tag == _TAG_FULL_FLOAT else "<u4"
        weights = np.frombuffer(data, dtype=wtype, count=count, offset=pos + 8 * count).astype(np.float64)
        pos = end
    if pos != len(data):
        raise MalformedImageError(f"{len(data) - pos} trailing octets after payload")

    if count and np.any(np.diff(means) < 0):
        raise NonMonotoneMeansError("decoded means are not non-decreasing")
    if not np.all(np.isfinite(means)) or not np.all(weights > 0) or not np.all(np.isfinite(weights)):
        raise MalformedImageError("payload holds non-finite means or nonpositive weights")
    if count and not math.isclose(math.fsum(weights.tolist()), total, rel_tol=1e-12):
        raise MalformedImageError("centroid weights do not add up to the recorded total weight")
    if count == 0 and total != 0:
        raise MalformedImageError("empty image with nonzero total weight")

    try:
        digest = TDigest(delta, scale)
    except CodecError:
        raise
    except ValueError as exc:
        raise MalformedImageError(str(exc)) from None
    digest._means = means
    digest._weights = weights
    digest._total = float(total)
    digest.min = float(xmin)
    digest.max = float(xmax)
    return digest
