"""Axis-aligned boxes and box IoU.

Boxes use the pixel-edge convention: (x1, y1) is the top-left corner and
(x2, y2) is exclusive, so a single pixel at integer (x, y) is the box
(x, y, x+1, y+1) and area equals covered pixel count for integer boxes.
"""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class BoundingBox:
    x1: float
    y1: float
    x2: float
    y2: float

    def __post_init__(self):
        if self.x2 < self.x1 or self.y2 < self.y1:
            raise ValueError(f"inverted box: {(self.x1, self.y1, self.x2, self.y2)}")

    @property
    def width(self) -> float:
        return self.x2 - self.x1

    @property
    def height(self) -> float:
        return self.y2 - self.y1

    @property
    def area(self) -> float:
        return self.width * self.height

    def is_empty(self) -> bool:
        return self.area == 0.0

    def intersection_area(self, other: "BoundingBox") -> float:
        iw = min(self.x2, other.x2) - max(self.x1, other.x1)
        ih = min(self.y2, other.y2) - max(self.y1, other.y1)
        if iw <= 0.0 or ih <= 0.0:
            return 0.0
        return iw * ih

    def clamped(self, width: float, height: float) -> "BoundingBox":
        """Clamp to the frame [0, width] x [0, height]."""
        x1 = min(max(self.x1, 0.0), width)
        y1 = min(max(self.y1, 0.0), height)
        x2 = min(max(self.x2, 0.0), width)
        y2 = min(max(self.y2, 0.0), height)
        return BoundingBox(x1, y1, x2, y2)

    def to_list(self) -> list[float]:
        return [self.x1, self.y1, self.x2, self.y2]

    def to_xywh(self) -> list[float]:
        return [self.x1, self.y1, self.width, self.height]

    @classmethod
    def from_list(cls, xyxy) -> "BoundingBox":
        x1, y1, x2, y2 = (float(v) for v in xyxy)
        return cls(x1, y1, x2, y2)

    @classmethod
    def from_xywh(cls, xywh) -> "BoundingBox":
        x, y, w, h = (float(v) for v in xywh)
        return cls(x, y, x + w, y + h)


EMPTY_BOX = BoundingBox(0.0, 0.0, 0.0, 0.0)


def box_iou(a: BoundingBox, b: BoundingBox) -> float:
    """Intersection over union of two boxes; 0.0 when the union is empty."""
    inter = a.intersection_area(b)
    union = a.area + b.area - inter
    if union <= 0.0:
        return 0.0
    return inter / union
