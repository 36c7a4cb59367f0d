"""COCO-convention run-length encoding of binary masks.

Runs are column-major (down each column, left to right) and alternate
0-run / 1-run starting with a 0-run, which may be empty. Both the plain
integer `counts` list and COCO's compressed ASCII string form are
supported, bit-exact to the reference codec: 5-bit little-endian chunks
with a continuation flag in bit 5, offset by 48 into printable ASCII,
and counts difference-coded against counts[i-2] from the fourth run on.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import MalformedRleError
from .masks import BinaryMask


@dataclass(frozen=True)
class RleMask:
    width: int
    height: int
    counts: tuple[int, ...]

    def __post_init__(self):
        if any(c < 0 for c in self.counts):
            raise MalformedRleError(f"negative run length in {self.counts[:8]}...")
        total = sum(self.counts)
        if total != self.width * self.height:
            raise MalformedRleError(
                f"counts sum to {total}, expected {self.width * self.height} "
                f"for {self.width}x{self.height}"
            )


def rle_encode(m: BinaryMask) -> RleMask:
    """Encode a mask as column-major alternating runs, leading 0-run first."""
    flat = m.to_array().ravel(order="F")
    n = flat.size
    if n == 0:
        return RleMask(width=m.width, height=m.height, counts=())
    change = np.flatnonzero(flat[1:] != flat[:-1]) + 1
    bounds = np.concatenate(([0], change, [n]))
    runs = np.diff(bounds).tolist()
    if flat[0]:
        runs = [0] + runs
    return RleMask(width=m.width, height=m.height, counts=tuple(int(r) for r in runs))


def rle_decode(r: RleMask) -> BinaryMask:
    """Inverse of rle_encode; validates that counts cover the full raster."""
    values = np.zeros(len(r.counts), dtype=bool)
    values[1::2] = True
    flat = np.repeat(values, np.asarray(r.counts, dtype=np.int64))
    arr = flat.reshape((r.height, r.width), order="F")
    return BinaryMask.from_array(arr)


def counts_to_string(counts) -> str:
    """Compress integer run lengths into the COCO ASCII string form."""
    chars = []
    counts = list(counts)
    for i, c in enumerate(counts):
        x = int(c)
        if i > 2:
            x -= int(counts[i - 2])
        more = True
        while more:
            chunk = x & 0x1F
            x >>= 5
            more = (x != -1) if (chunk & 0x10) else (x != 0)
            if more:
                chunk |= 0x20
            chars.append(chr(chunk + 48))
    return "".join(chars)


def string_to_counts(s: str) -> tuple[int, ...]:
    """Inverse of counts_to_string."""
    counts: list[int] = []
    p = 0
    n = len(s)
    while p < n:
        x = 0
        k = 0
        more = True
        while more:
            if p >= n:
                raise MalformedRleError("truncated compressed RLE string")
            c = ord(s[p]) - 48
            if c < 0 or c > 63:
                raise MalformedRleError(f"invalid RLE character {s[p]!r} at {p}")
            x |= (c & 0x1F) << (5 * k)
            more = bool(c & 0x20)
            p += 1
            k += 1
            if not more and (c & 0x10):
                x |= -1 << (5 * k)
        if len(counts) > 2:
            x += counts[len(counts) - 2]
        counts.append(x)
    return tuple(counts)


def rle_to_coco(r: RleMask) -> dict:
    """COCO segmentation dict with compressed string counts."""
    return {"size": [r.height, r.width], "counts": counts_to_string(r.counts)}


def rle_from_coco(seg: dict) -> RleMask:
    """Parse a COCO segmentation dict; accepts compressed string or int list."""
    try:
        h, w = int(seg["size"][0]), int(seg["size"][1])
        counts = seg["counts"]
    except (KeyError, TypeError, ValueError, IndexError) as exc:
        raise MalformedRleError(f"bad RLE object: {exc}") from exc
    if isinstance(counts, str):
        decoded = string_to_counts(counts)
    else:
        decoded = tuple(int(c) for c in counts)
    return RleMask(width=w, height=h, counts=decoded)


def mask_to_coco(m: BinaryMask) -> dict:
    return rle_to_coco(rle_encode(m))


def mask_from_coco(seg: dict) -> BinaryMask:
    return rle_decode(rle_from_coco(seg))
