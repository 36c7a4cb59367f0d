"""Text/image embedding backends for text prompts.

Embeddings are unit-normalized vectors; similarity is their dot product.
The color embedder is a weight-free stand-in that maps image crops to their
mean-color direction and color words to the matching axes, which makes text
prompts fully functional on synthetic scenes.
"""

from __future__ import annotations

from abc import ABC, abstractmethod

import numpy as np
from PIL import Image

from ..errors import BackendConfigError

COLOR_WORDS = {
    "red": (1.0, 0.0, 0.0),
    "green": (0.0, 1.0, 0.0),
    "blue": (0.0, 0.0, 1.0),
    "yellow": (1.0, 1.0, 0.0),
    "cyan": (0.0, 1.0, 1.0),
    "magenta": (1.0, 0.0, 1.0),
    "orange": (1.0, 0.5, 0.0),
    "purple": (0.5, 0.0, 1.0),
    "white": (1.0, 1.0, 1.0),
}


def unit(v: np.ndarray) -> np.ndarray:
    v = np.asarray(v, dtype=np.float64)
    norm = float(np.linalg.norm(v))
    if norm == 0.0:
        out = np.full(v.shape, 1.0 / np.sqrt(v.size))
        return out
    return v / norm


class EmbeddingBackend(ABC):
    """Maps text or masked image crops to unit vectors of a fixed dimension."""

    input_size: int = 64

    @abstractmethod
    def embed_text(self, text: str) -> np.ndarray:
        ...

    @abstractmethod
    def embed_image(self, crop: np.ndarray) -> np.ndarray:
        ...


class ColorEmbedder(EmbeddingBackend):
    """3-d embeddings: crops by masked mean color, text by color-word lookup."""

    input_size = 64

    def embed_text(self, text: str) -> np.ndarray:
        for word, rgb in COLOR_WORDS.items():
            if word in text.lower():
                return unit(np.array(rgb))
        return unit(np.ones(3))

    def embed_image(self, crop: np.ndarray) -> np.ndarray:
        arr = np.asarray(crop, dtype=np.float64)
        lit = arr.sum(axis=2) > 0  # out-of-mask pixels are zeroed black
        if not lit.any():
            return unit(np.zeros(3))
        return unit(arr[lit].mean(axis=0))


class ClipEmbedder(EmbeddingBackend):
    """CLIP-style embedder backed by a local transformers checkpoint."""

    input_size = 224

    def __init__(self, model_path: str):
        try:
            import torch  # noqa: F401
            from transformers import CLIPModel, CLIPProcessor
        except ImportError as exc:
            raise BackendConfigError(
                "torch and transformers are required for the CLIP embedder "
                "(pip install 'promptseg[clip]')"
            ) from exc
        try:
            self._model = CLIPModel.from_pretrained(model_path)
            self._processor = CLIPProcessor.from_pretrained(model_path)
        except (OSError, ValueError) as exc:
            raise BackendConfigError(f"cannot load CLIP model {model_path}: {exc}") from exc
        self._model.eval()

    def embed_text(self, text: str) -> np.ndarray:
        import torch

        inputs = self._processor(text=[text], return_tensors="pt", padding=True)
        with torch.no_grad():
            feats = self._model.get_text_features(**inputs)
        return unit(feats[0].numpy())

    def embed_image(self, crop: np.ndarray) -> np.ndarray:
        import torch

        image = Image.fromarray(np.asarray(crop, dtype=np.uint8))
        inputs = self._processor(images=image, return_tensors="pt")
        with torch.no_grad():
            feats = self._model.get_image_features(**inputs)
        return unit(feats[0].numpy())


def embedder_from_spec(spec: str) -> EmbeddingBackend:
    """Build an embedder from "color" or "clip:<model-path>"."""
    kind, _, path = spec.partition(":")
    if kind == "color":
        return ColorEmbedder()
    if kind == "clip":
        if not path:
            raise BackendConfigError("clip embedder needs a model path: clip:<path>")
        return ClipEmbedder(path)
    raise BackendConfigError(f"unknown embedder kind {kind!r}")
