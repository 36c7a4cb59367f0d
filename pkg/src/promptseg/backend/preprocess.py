"""Letterbox preprocessing: scale to the model input square, center, pad."""

from __future__ import annotations

import numpy as np
from PIL import Image

from ..imageops import decode_image
from .types import ImageTensor, PadInfo

PAD_VALUE = 114  # uint8 fill for letterbox borders


def letterbox_params(orig_w: int, orig_h: int, input_size: int) -> PadInfo:
    """Scale by input/max(w,h), center content, record the transform."""
    scale = input_size / max(orig_w, orig_h)
    content_w = int(round(orig_w * scale))
    content_h = int(round(orig_h * scale))
    return PadInfo(
        scale=scale,
        pad_x=(input_size - content_w) // 2,
        pad_y=(input_size - content_h) // 2,
        orig_w=orig_w,
        orig_h=orig_h,
        content_w=content_w,
        content_h=content_h,
        input_size=input_size,
    )


def preprocess_array(img: np.ndarray, input_size: int) -> tuple[ImageTensor, PadInfo]:
    """Letterbox an RGB uint8 (H, W, 3) array into an ImageTensor."""
    h, w = img.shape[:2]
    pad = letterbox_params(w, h, input_size)
    resized = np.asarray(
        Image.fromarray(img).resize((pad.content_w, pad.content_h), Image.BILINEAR)
    )
    canvas = np.full((input_size, input_size, 3), PAD_VALUE, dtype=np.uint8)
    canvas[pad.pad_y : pad.pad_y + pad.content_h, pad.pad_x : pad.pad_x + pad.content_w] = resized
    data = canvas.astype(np.float32).transpose(2, 0, 1) / 255.0
    return ImageTensor(width=input_size, height=input_size, data=data), pad


def preprocess(image_bytes: bytes, input_size: int) -> tuple[ImageTensor, PadInfo]:
    """Decode PNG/JPEG bytes and letterbox to the model input size."""
    return preprocess_array(decode_image(image_bytes), input_size)
