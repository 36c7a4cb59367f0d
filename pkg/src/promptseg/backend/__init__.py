from .base import InferenceBackend, backend_from_spec
from .embed import ColorEmbedder, EmbeddingBackend, embedder_from_spec, unit
from .mock import (
    Disk,
    MockBackend,
    Polygon,
    Rect,
    SyntheticScene,
    rasterize_shape,
    render_scene,
    render_scene_png,
)
from .preprocess import letterbox_params, preprocess, preprocess_array
from .types import ImageTensor, PadInfo, RawNetworkOutput, make_anchor_grid

__all__ = [
    "InferenceBackend",
    "backend_from_spec",
    "ColorEmbedder",
    "EmbeddingBackend",
    "embedder_from_spec",
    "unit",
    "Disk",
    "MockBackend",
    "Polygon",
    "Rect",
    "SyntheticScene",
    "rasterize_shape",
    "render_scene",
    "render_scene_png",
    "letterbox_params",
    "preprocess",
    "preprocess_array",
    "ImageTensor",
    "PadInfo",
    "RawNetworkOutput",
    "make_anchor_grid",
]
