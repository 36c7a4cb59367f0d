"""Raster helpers: bilinear resampling, PNG I/O, numerically safe sigmoid."""

from __future__ import annotations

import io

import numpy as np
from PIL import Image, UnidentifiedImageError
from scipy.special import expit as sigmoid  # noqa: F401  (re-exported)

from .errors import InputFormatError


def _axis_lerp(n_src: int, n_out: int):
    """Source indices and weights for half-pixel-center bilinear resampling."""
    pos = (np.arange(n_out, dtype=np.float64) + 0.5) * (n_src / n_out) - 0.5
    i0 = np.floor(pos).astype(np.int64)
    w = pos - i0
    i1 = np.clip(i0 + 1, 0, n_src - 1)
    i0 = np.clip(i0, 0, n_src - 1)
    return i0, i1, w


def bilinear_resize(src: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Resize a 2-d map with half-pixel centers and edge clamping."""
    src = np.asarray(src, dtype=np.float64)
    y0, y1, wy = _axis_lerp(src.shape[0], out_h)
    x0, x1, wx = _axis_lerp(src.shape[1], out_w)
    rows = src[y0] * (1.0 - wy)[:, None] + src[y1] * wy[:, None]
    return rows[:, x0] * (1.0 - wx) + rows[:, x1] * wx


def bilinear_sample(src: np.ndarray, ys: np.ndarray, xs: np.ndarray) -> np.ndarray:
    """Sample a 2-d map at continuous grid coords; outside the grid reads 0.

    Coordinates follow the convention where pixel (i, j) sits at (y=i, x=j).
    Samples more than one pixel beyond the border get no support and are 0;
    partial support near the border decays linearly (no edge replication).
    """
    src = np.asarray(src, dtype=np.float64)
    h, w = src.shape
    ys, xs = np.broadcast_arrays(np.asarray(ys, dtype=np.float64), np.asarray(xs, dtype=np.float64))
    y0 = np.floor(ys).astype(np.int64)
    x0 = np.floor(xs).astype(np.int64)
    fy = ys - y0
    fx = xs - x0

    out = np.zeros(ys.shape, dtype=np.float64)
    for dy, wy in ((0, 1.0 - fy), (1, fy)):
        for dx, wx in ((0, 1.0 - fx), (1, fx)):
            yy = y0 + dy
            xx = x0 + dx
            valid = (yy >= 0) & (yy < h) & (xx >= 0) & (xx < w)
            if not valid.any():
                continue
            vals = np.zeros_like(out)
            vals[valid] = src[yy[valid], xx[valid]]
            out += wy * wx * vals
    return out


def decode_image(data: bytes) -> np.ndarray:
    """Decode PNG/JPEG bytes to an RGB uint8 (H, W, 3) array."""
    try:
        with Image.open(io.BytesIO(data)) as img:
            return np.asarray(img.convert("RGB"))
    except (UnidentifiedImageError, OSError, ValueError) as exc:
        raise InputFormatError(f"cannot decode image: {exc}") from exc


def encode_png_rgb(arr: np.ndarray) -> bytes:
    buf = io.BytesIO()
    Image.fromarray(np.asarray(arr, dtype=np.uint8), mode="RGB").save(buf, format="PNG")
    return buf.getvalue()


def encode_png_gray(strength: np.ndarray) -> bytes:
    """Export a [0, 1] map as 8-bit grayscale PNG (value = round(strength*255))."""
    scaled = np.rint(np.clip(strength, 0.0, 1.0) * 255.0).astype(np.uint8)
    buf = io.BytesIO()
    Image.fromarray(scaled, mode="L").save(buf, format="PNG")
    return buf.getvalue()


def decode_png_gray(data: bytes) -> np.ndarray:
    """Load a grayscale PNG as float in [0, 1]."""
    try:
        with Image.open(io.BytesIO(data)) as img:
            return np.asarray(img.convert("L"), dtype=np.float64) / 255.0
    except (UnidentifiedImageError, OSError, ValueError) as exc:
        raise InputFormatError(f"cannot decode grayscale image: {exc}") from exc
