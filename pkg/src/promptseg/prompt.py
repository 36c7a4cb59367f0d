"""Stage two: resolve point / box / text prompts against a SegmentCache.

All operations are read-only on the cache. Selected masks are merged by
pixelwise union followed by one morphological closing pass (3x3 square by
default) to repair seams between adjacent part-masks.

Prompt JSON schema::

    {"points": [{"x": 10, "y": 20, "label": "fg"}, ...]}
    {"box": [x1, y1, x2, y2]}
    {"text": "..."}
"""

from __future__ import annotations

import threading
from dataclasses import dataclass

import numpy as np
from PIL import Image
from scipy import ndimage

from .backend.embed import EmbeddingBackend, unit
from .errors import DimensionMismatchError, InputFormatError
from .geometry import BoundingBox, box_iou
from .masks import BinaryMask, bbox_of
from .maskgen import SegmentCache

FG = "fg"
BG = "bg"


@dataclass(frozen=True)
class PointsPrompt:
    points: tuple[tuple[float, float, str], ...]  # (x, y, label)


@dataclass(frozen=True)
class BoxPrompt:
    box: BoundingBox


@dataclass(frozen=True)
class TextPrompt:
    text: str


PromptSpec = PointsPrompt | BoxPrompt | TextPrompt


@dataclass(frozen=True)
class PromptResult:
    """Selected instance indices, their merged mask, and per-candidate scores.

    `scores` has one entry per cache instance: IoU values for box prompts,
    cosine similarities for text prompts, and the fraction of foreground
    points contained for point prompts.
    """

    indices: tuple[int, ...]
    merged_mask: BinaryMask
    scores: tuple[float, ...]

    @property
    def is_empty(self) -> bool:
        return not self.indices


def parse_prompt(obj: dict) -> PromptSpec:
    """Validate and parse the documented prompt JSON."""
    if not isinstance(obj, dict):
        raise InputFormatError("prompt must be a JSON object")
    kinds = [k for k in ("points", "box", "text") if k in obj]
    if len(kinds) != 1:
        raise InputFormatError(
            f"prompt must contain exactly one of points/box/text, got {kinds or 'none'}"
        )
    if "points" in obj:
        raw = obj["points"]
        if not isinstance(raw, list) or not raw:
            raise InputFormatError("points must be a non-empty list")
        points = []
        for i, p in enumerate(raw):
            try:
                label = p["label"]
                if label not in (FG, BG):
                    raise InputFormatError(f"points[{i}].label must be 'fg' or 'bg'")
                points.append((float(p["x"]), float(p["y"]), label))
            except (KeyError, TypeError, ValueError) as exc:
                raise InputFormatError(f"bad point at index {i}: {exc}") from exc
        if not any(lbl == FG for _, _, lbl in points):
            raise InputFormatError("at least one foreground point is required")
        return PointsPrompt(points=tuple(points))
    if "box" in obj:
        try:
            box = BoundingBox.from_list(obj["box"])
        except (TypeError, ValueError) as exc:
            raise InputFormatError(f"bad box: {exc}") from exc
        if box.is_empty():
            raise InputFormatError("box prompt must have positive area")
        return BoxPrompt(box=box)
    text = obj["text"]
    if not isinstance(text, str) or not text.strip():
        raise InputFormatError("text prompt must be a non-empty string")
    return TextPrompt(text=text)


def merge_masks(
    masks: list[BinaryMask], kernel: int = 3, iterations: int = 1
) -> BinaryMask:
    """Pixelwise union, then morphological closing with a square element."""
    if not masks:
        raise InputFormatError("merge_masks needs at least one mask")
    w, h = masks[0].width, masks[0].height
    union = np.zeros((h, w), dtype=bool)
    for m in masks:
        if m.width != w or m.height != h:
            raise DimensionMismatchError(
                f"mask {m.width}x{m.height} does not match {w}x{h}"
            )
        union |= m.to_array()
    structure = np.ones((kernel, kernel), dtype=bool)
    closed = union
    for _ in range(iterations):
        closed = ndimage.binary_erosion(
            ndimage.binary_dilation(closed, structure=structure), structure=structure
        )
    return BinaryMask.from_array(closed)


def _merge_selection(cache: SegmentCache, indices: list[int],
                     scores: list[float], kernel: int, iterations: int) -> PromptResult:
    if indices:
        merged = merge_masks([cache.instances[i].mask for i in indices], kernel, iterations)
    else:
        merged = BinaryMask.empty(cache.width, cache.height)
    return PromptResult(indices=tuple(indices), merged_mask=merged, scores=tuple(scores))


def select_by_points(
    cache: SegmentCache,
    points: PointsPrompt,
    closing_kernel: int = 3,
    closing_iterations: int = 1,
) -> PromptResult:
    """Instances containing a foreground point, minus any containing a
    background point; survivors merged."""
    for x, y, _ in points.points:
        if not (0 <= x < cache.width and 0 <= y < cache.height):
            raise InputFormatError(
                f"point ({x}, {y}) outside image {cache.width}x{cache.height}"
            )
    fg = [(x, y) for x, y, lbl in points.points if lbl == FG]
    bg = [(x, y) for x, y, lbl in points.points if lbl == BG]
    indices = []
    scores = []
    for i, inst in enumerate(cache.instances):
        fg_hits = sum(1 for x, y in fg if inst.mask.contains(x, y))
        bg_hit = any(inst.mask.contains(x, y) for x, y in bg)
        scores.append(fg_hits / len(fg))
        if fg_hits > 0 and not bg_hit:
            indices.append(i)
    return _merge_selection(cache, indices, scores, closing_kernel, closing_iterations)


def select_by_box(
    cache: SegmentCache,
    prompt: BoxPrompt,
    closing_kernel: int = 3,
    closing_iterations: int = 1,
) -> PromptResult:
    """The single instance whose mask bbox best matches the prompt box.

    Ties break toward higher detection score, then lower index; an all-zero
    IoU row yields the empty result.
    """
    scores = [box_iou(prompt.box, bbox_of(inst.mask)) for inst in cache.instances]
    best = -1
    for i, iou in enumerate(scores):
        if iou <= 0.0:
            continue
        if best < 0 or iou > scores[best] or (
            iou == scores[best] and cache.instances[i].score > cache.instances[best].score
        ):
            best = i
    indices = [best] if best >= 0 else []
    return _merge_selection(cache, indices, scores, closing_kernel, closing_iterations)


def instance_crop(cache: SegmentCache, index: int) -> np.ndarray:
    """RGB crop of an instance's mask bbox with out-of-mask pixels zeroed."""
    inst = cache.instances[index]
    box = bbox_of(inst.mask)
    x0, y0, x1, y1 = (int(v) for v in box.to_list())
    crop = cache.image[y0:y1, x0:x1].copy()
    crop[~inst.mask.to_array()[y0:y1, x0:x1]] = 0
    return crop


class EmbeddingMemo:
    """Write-once-per-key cache of instance embeddings for one session."""

    def __init__(self):
        self._store: dict[int, np.ndarray] = {}
        self._lock = threading.Lock()

    def get_or_compute(self, key: int, compute) -> np.ndarray:
        with self._lock:
            if key in self._store:
                return self._store[key]
        value = compute()
        with self._lock:
            return self._store.setdefault(key, value)


def _embed_instance(cache: SegmentCache, index: int, embedder: EmbeddingBackend) -> np.ndarray:
    crop = instance_crop(cache, index)
    if crop.size == 0:
        return unit(np.zeros(embedder.embed_text("").shape))
    size = embedder.input_size
    resized = np.asarray(Image.fromarray(crop).resize((size, size), Image.BILINEAR))
    return embedder.embed_image(resized)


def select_by_text(
    cache: SegmentCache,
    prompt: TextPrompt,
    embedder: EmbeddingBackend,
    memo: EmbeddingMemo | None = None,
    closing_kernel: int = 3,
    closing_iterations: int = 1,
) -> PromptResult:
    """The instance whose masked-crop embedding is most similar to the text.

    Similarities for every instance are reported; ties break toward higher
    detection score, then lower index.
    """
    text_vec = unit(embedder.embed_text(prompt.text))
    memo = memo or EmbeddingMemo()
    scores = []
    for i in range(len(cache.instances)):
        vec = memo.get_or_compute(i, lambda i=i: _embed_instance(cache, i, embedder))
        scores.append(float(np.dot(text_vec, vec)))
    best = -1
    for i, sim in enumerate(scores):
        if best < 0 or sim > scores[best] or (
            sim == scores[best] and cache.instances[i].score > cache.instances[best].score
        ):
            best = i
    indices = [best] if best >= 0 else []
    return _merge_selection(cache, indices, scores, closing_kernel, closing_iterations)


def run_prompt(
    cache: SegmentCache,
    spec: PromptSpec,
    embedder: EmbeddingBackend | None = None,
    memo: EmbeddingMemo | None = None,
    closing_kernel: int = 3,
    closing_iterations: int = 1,
) -> PromptResult:
    """Dispatch a parsed prompt to the matching selection operation."""
    if isinstance(spec, PointsPrompt):
        return select_by_points(cache, spec, closing_kernel, closing_iterations)
    if isinstance(spec, BoxPrompt):
        return select_by_box(cache, spec, closing_kernel, closing_iterations)
    if isinstance(spec, TextPrompt):
        if embedder is None:
            raise InputFormatError("text prompts require an embedding backend")
        return select_by_text(cache, spec, embedder, memo, closing_kernel, closing_iterations)
    raise InputFormatError(f"unknown prompt type {type(spec).__name__}")
