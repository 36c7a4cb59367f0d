"""Tensor contracts between preprocessing, inference backends, and decoding."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import BackendConfigError, DimensionMismatchError
from ..geometry import BoundingBox


@dataclass(frozen=True)
class PadInfo:
    """Letterbox transform: original frame -> padded square input frame."""

    scale: float
    pad_x: int
    pad_y: int
    orig_w: int
    orig_h: int
    content_w: int
    content_h: int
    input_size: int

    def point_to_input(self, x: float, y: float) -> tuple[float, float]:
        return x * self.scale + self.pad_x, y * self.scale + self.pad_y

    def point_to_original(self, x: float, y: float) -> tuple[float, float]:
        return (x - self.pad_x) / self.scale, (y - self.pad_y) / self.scale

    def box_to_input(self, box: BoundingBox) -> BoundingBox:
        x1, y1 = self.point_to_input(box.x1, box.y1)
        x2, y2 = self.point_to_input(box.x2, box.y2)
        return BoundingBox(x1, y1, x2, y2)

    def box_to_original(self, box: BoundingBox) -> BoundingBox:
        x1, y1 = self.point_to_original(box.x1, box.y1)
        x2, y2 = self.point_to_original(box.x2, box.y2)
        return BoundingBox(x1, y1, x2, y2)


@dataclass(frozen=True)
class ImageTensor:
    """Channel-major float32 tensor in [0, 1], letterboxed to a square."""

    width: int
    height: int
    data: np.ndarray  # (3, height, width)

    def __post_init__(self):
        if self.data.shape != (3, self.height, self.width):
            raise DimensionMismatchError(
                f"tensor shape {self.data.shape} != (3, {self.height}, {self.width})"
            )


def make_anchor_grid(input_size: int, strides: tuple[int, ...]) -> np.ndarray:
    """(N, 3) rows of (cx, cy, stride): grid cell centers per FPN level."""
    levels = []
    for s in strides:
        n = input_size // s
        coords = (np.arange(n, dtype=np.float32) + 0.5) * s
        cx, cy = np.meshgrid(coords, coords)
        level = np.stack(
            [cx.ravel(), cy.ravel(), np.full(n * n, s, dtype=np.float32)], axis=1
        )
        levels.append(level)
    return np.concatenate(levels, axis=0)


@dataclass(frozen=True)
class RawNetworkOutput:
    """Per-image tensors produced by an inference backend."""

    anchors: np.ndarray  # (N, 3) float32: cx, cy, stride in input pixels
    cls_logits: np.ndarray  # (N,) float32, single class-agnostic channel
    dfl_logits: np.ndarray  # (N, 4*reg_max) float32
    mask_coeffs: np.ndarray  # (N, K) float32 in [-1, 1]
    prototypes: np.ndarray  # (K, input/4, input/4) float32

    def validate(self, input_size: int, reg_max: int) -> None:
        n = self.anchors.shape[0]
        q = input_size // 4
        k = self.prototypes.shape[0]
        checks = [
            (self.anchors.shape == (n, 3), f"anchors {self.anchors.shape}"),
            (self.cls_logits.shape == (n,), f"cls_logits {self.cls_logits.shape}"),
            (
                self.dfl_logits.shape == (n, 4 * reg_max),
                f"dfl_logits {self.dfl_logits.shape}, want (N, {4 * reg_max})",
            ),
            (self.mask_coeffs.shape == (n, k), f"mask_coeffs {self.mask_coeffs.shape}"),
            (
                self.prototypes.shape == (k, q, q),
                f"prototypes {self.prototypes.shape}, want (K, {q}, {q})",
            ),
        ]
        for ok, what in checks:
            if not ok:
                raise BackendConfigError(f"backend output shape mismatch: {what}")
        if self.mask_coeffs.size and (
            self.mask_coeffs.min() < -1.0 or self.mask_coeffs.max() > 1.0
        ):
            raise BackendConfigError("mask coefficients outside [-1, 1]")
