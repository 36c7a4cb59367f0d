"""Zero-shot edge maps from cached instance probability maps.

Pipeline: aggregate per-instance probability maps (pixelwise max), apply the
3x3 Sobel operator, then thin with Canny-style non-maximum suppression along
the gradient direction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .config import EngineConfig
from .errors import DimensionMismatchError
from .imageops import encode_png_gray
from .maskgen import SegmentCache


@dataclass(frozen=True)
class EdgeMap:
    width: int
    height: int
    strength: np.ndarray  # float32 (height, width) in [0, 1]

    def to_png_bytes(self) -> bytes:
        return encode_png_gray(self.strength)


def aggregate_prob(cache: SegmentCache, mode: str = "max") -> np.ndarray:
    """Combine instance probability maps into one; zeros when no instances.

    "max" keeps every instance boundary; "sum" accumulates and clips to 1.
    """
    out = np.zeros((cache.height, cache.width), dtype=np.float64)
    for inst in cache.instances:
        x0, y0 = inst.patch_origin
        ph, pw = inst.prob_patch.shape
        region = out[y0 : y0 + ph, x0 : x0 + pw]
        if mode == "max":
            np.maximum(region, inst.prob_patch, out=region)
        elif mode == "sum":
            region += inst.prob_patch
        else:
            raise ValueError(f"unknown aggregation mode {mode!r}")
    if mode == "sum":
        np.clip(out, 0.0, 1.0, out=out)
    return out


def sobel(prob: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """3x3 Sobel with replicate borders.

    Returns (magnitude normalized to [0, 1] by its maximum, orientation as
    atan2(gy, gx)); an all-constant input yields all-zero magnitude.
    """
    prob = np.asarray(prob, dtype=np.float64)
    gx = ndimage.sobel(prob, axis=1, mode="nearest")
    gy = ndimage.sobel(prob, axis=0, mode="nearest")
    magnitude = np.hypot(gx, gy)
    peak = magnitude.max()
    if peak > 0.0:
        magnitude /= peak
    orientation = np.arctan2(gy, gx)
    return magnitude, orientation


def edge_nms(magnitude: np.ndarray, orientation: np.ndarray) -> EdgeMap:
    """Keep pixels that are maximal along their gradient direction.

    Each pixel is compared against the two linearly interpolated neighbors
    one pixel away along +/-(cos t, sin t); non-maxima drop to zero.
    """
    magnitude = np.asarray(magnitude, dtype=np.float64)
    if magnitude.shape != orientation.shape:
        raise DimensionMismatchError(
            f"magnitude {magnitude.shape} vs orientation {orientation.shape}"
        )
    h, w = magnitude.shape
    ys, xs = np.mgrid[0:h, 0:w].astype(np.float64)
    dx = np.cos(orientation)
    dy = np.sin(orientation)
    ahead = ndimage.map_coordinates(
        magnitude, [ys + dy, xs + dx], order=1, mode="nearest"
    )
    behind = ndimage.map_coordinates(
        magnitude, [ys - dy, xs - dx], order=1, mode="nearest"
    )
    keep = (magnitude >= ahead) & (magnitude >= behind)
    strength = np.where(keep, magnitude, 0.0)
    return EdgeMap(width=w, height=h, strength=strength.astype(np.float32))


def edges_from_cache(cache: SegmentCache, cfg: EngineConfig | None = None) -> EdgeMap:
    cfg = cfg or EngineConfig()
    prob = aggregate_prob(cache, mode=cfg.edge_aggregation)
    magnitude, orientation = sobel(prob)
    return edge_nms(magnitude, orientation)


def edges_for_image(image, backend, cfg: EngineConfig | None = None) -> EdgeMap:
    """Full pipeline: segment everything, aggregate, Sobel, thin."""
    from .maskgen import segment_everything

    cfg = cfg or EngineConfig()
    cache = segment_everything(image, backend, cfg)
    return edges_from_cache(cache, cfg)
