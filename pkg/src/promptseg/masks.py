"""Binary masks stored as packed row-major bits, plus mask IoU and tight boxes."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import DimensionMismatchError
from .geometry import EMPTY_BOX, BoundingBox

_POPCOUNT8 = np.array([bin(i).count("1") for i in range(256)], dtype=np.uint8)


@dataclass(frozen=True)
class BinaryMask:
    """Immutable bitmap; `data` holds width*height row-major bits, MSB first."""

    width: int
    height: int
    data: bytes

    def __post_init__(self):
        expected = (self.width * self.height + 7) // 8
        if len(self.data) != expected:
            raise DimensionMismatchError(
                f"mask data holds {len(self.data)} bytes, expected {expected} "
                f"for {self.width}x{self.height}"
            )

    @classmethod
    def from_array(cls, arr: np.ndarray) -> "BinaryMask":
        """Build from a (height, width) array; nonzero means set."""
        if arr.ndim != 2:
            raise DimensionMismatchError(f"expected 2-d array, got shape {arr.shape}")
        h, w = arr.shape
        packed = np.packbits(arr.astype(bool).ravel())
        return cls(width=w, height=h, data=packed.tobytes())

    @classmethod
    def empty(cls, width: int, height: int) -> "BinaryMask":
        return cls(width=width, height=height, data=bytes((width * height + 7) // 8))

    def to_array(self) -> np.ndarray:
        """Unpack to a (height, width) bool array."""
        bits = np.unpackbits(np.frombuffer(self.data, dtype=np.uint8))
        return bits[: self.width * self.height].astype(bool).reshape(self.height, self.width)

    @cached_property
    def popcount(self) -> int:
        return int(_POPCOUNT8[np.frombuffer(self.data, dtype=np.uint8)].sum(dtype=np.int64))

    def contains(self, x: float, y: float) -> bool:
        """Whether the pixel under continuous point (x, y) is set."""
        ix, iy = int(x), int(y)
        if not (0 <= ix < self.width and 0 <= iy < self.height):
            return False
        idx = iy * self.width + ix
        return bool((self.data[idx >> 3] >> (7 - (idx & 7))) & 1)

    def __bool__(self) -> bool:
        return self.popcount > 0


def _check_same_shape(a: BinaryMask, b: BinaryMask) -> None:
    if a.width != b.width or a.height != b.height:
        raise DimensionMismatchError(
            f"mask shapes differ: {a.width}x{a.height} vs {b.width}x{b.height}"
        )


def mask_iou(a: BinaryMask, b: BinaryMask) -> float:
    """IoU of two equally sized masks via bitwise ops; 0.0 when both empty."""
    _check_same_shape(a, b)
    pa = np.frombuffer(a.data, dtype=np.uint8)
    pb = np.frombuffer(b.data, dtype=np.uint8)
    inter = int(_POPCOUNT8[pa & pb].sum(dtype=np.int64))
    union = int(_POPCOUNT8[pa | pb].sum(dtype=np.int64))
    if union == 0:
        return 0.0
    return inter / union


def bbox_of(m: BinaryMask) -> BoundingBox:
    """Tightest pixel-edge box containing all set pixels; EMPTY_BOX if none."""
    arr = m.to_array()
    ys, xs = np.nonzero(arr)
    if xs.size == 0:
        return EMPTY_BOX
    return BoundingBox(
        float(xs.min()), float(ys.min()), float(xs.max() + 1), float(ys.max() + 1)
    )
