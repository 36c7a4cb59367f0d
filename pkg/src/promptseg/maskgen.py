"""Stage one: decode detections, suppress duplicates, assemble instance masks.

Box sides come from a distribution-focal head: each side distance is the
softmax expectation over `reg_max` bins scaled by the anchor stride. Masks
are linear combinations of shared prototype maps: sigmoid of the coefficient-
weighted sum, bilinearly upsampled (half-pixel centers), cropped to the
detection box, and thresholded strictly.

The result of a run is an immutable SegmentCache holding every instance at
original image resolution; all prompt operations read from it and never
trigger inference again.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

from .backend.base import InferenceBackend
from .backend.preprocess import preprocess_array
from .backend.types import PadInfo, RawNetworkOutput
from .config import EngineConfig
from .errors import DimensionMismatchError, InputFormatError
from .geometry import BoundingBox
from .imageops import bilinear_resize, bilinear_sample, decode_image, sigmoid
from .masks import BinaryMask
from .rle import mask_to_coco


@dataclass(frozen=True)
class Detection:
    """One candidate in the padded input frame, before mask assembly."""

    box: BoundingBox
    score: float
    coeffs: np.ndarray  # (K,)
    anchor_index: int


@dataclass(frozen=True)
class ScoredInstance:
    """One segmented instance in original image coordinates.

    The probability map is stored as the patch covering the instance box
    (it is identically zero elsewhere); `prob_map()` materializes the full
    image-sized map.
    """

    box: BoundingBox
    score: float
    mask: BinaryMask
    prob_patch: np.ndarray  # float32 (ph, pw)
    patch_origin: tuple[int, int]  # (x0, y0) of the patch in image coords
    anchor_index: int

    def prob_map(self) -> np.ndarray:
        full = np.zeros((self.mask.height, self.mask.width), dtype=np.float32)
        x0, y0 = self.patch_origin
        ph, pw = self.prob_patch.shape
        full[y0 : y0 + ph, x0 : x0 + pw] = self.prob_patch
        return full


@dataclass(frozen=True)
class SegmentCache:
    """Frozen stage-one result for one image; shared by all prompts."""

    image_id: str
    pad: PadInfo
    instances: tuple[ScoredInstance, ...]
    prototypes: np.ndarray  # (K, S/4, S/4) float32
    image: np.ndarray  # original RGB uint8 (H, W, 3)

    @property
    def width(self) -> int:
        return self.pad.orig_w

    @property
    def height(self) -> int:
        return self.pad.orig_h


def softmax_expectation(logits: np.ndarray) -> np.ndarray:
    """E[j] under softmax(logits) along the last axis, in float64."""
    z = np.asarray(logits, dtype=np.float64)
    z = z - z.max(axis=-1, keepdims=True)
    w = np.exp(z)
    w /= w.sum(axis=-1, keepdims=True)
    bins = np.arange(z.shape[-1], dtype=np.float64)
    return (w * bins).sum(axis=-1)


def decode_dfl(
    dfl_logits: np.ndarray,
    anchor: tuple[float, float, float],
    reg_max: int,
    input_size: int,
) -> BoundingBox:
    """Decode one anchor's 4*reg_max logits into a clamped input-frame box."""
    logits = np.asarray(dfl_logits, dtype=np.float64).reshape(4, reg_max)
    d = softmax_expectation(logits)
    cx, cy, stride = anchor
    box = BoundingBox(
        cx - d[0] * stride, cy - d[1] * stride, cx + d[2] * stride, cy + d[3] * stride
    )
    return box.clamped(float(input_size), float(input_size))


def decode_detections(
    raw: RawNetworkOutput, conf_thresh: float, reg_max: int, input_size: int
) -> list[Detection]:
    """Sigmoid scores, keep anchors at/above threshold, decode their boxes."""
    scores = sigmoid(raw.cls_logits.astype(np.float64))
    keep = np.flatnonzero(scores >= conf_thresh)
    if keep.size == 0:
        return []
    logits = raw.dfl_logits[keep].astype(np.float64).reshape(-1, 4, reg_max)
    d = softmax_expectation(logits)  # (M, 4) in grid units
    anchors = raw.anchors[keep].astype(np.float64)
    cx, cy, s = anchors[:, 0], anchors[:, 1], anchors[:, 2]
    x1 = np.clip(cx - d[:, 0] * s, 0.0, input_size)
    y1 = np.clip(cy - d[:, 1] * s, 0.0, input_size)
    x2 = np.clip(cx + d[:, 2] * s, 0.0, input_size)
    y2 = np.clip(cy + d[:, 3] * s, 0.0, input_size)
    return [
        Detection(
            box=BoundingBox(float(x1[i]), float(y1[i]), float(x2[i]), float(y2[i])),
            score=float(scores[a]),
            coeffs=raw.mask_coeffs[a],
            anchor_index=int(a),
        )
        for i, a in enumerate(keep)
    ]


def _pairwise_iou_row(box: np.ndarray, others: np.ndarray) -> np.ndarray:
    ix1 = np.maximum(box[0], others[:, 0])
    iy1 = np.maximum(box[1], others[:, 1])
    ix2 = np.minimum(box[2], others[:, 2])
    iy2 = np.minimum(box[3], others[:, 3])
    inter = np.clip(ix2 - ix1, 0.0, None) * np.clip(iy2 - iy1, 0.0, None)
    area = (box[2] - box[0]) * (box[3] - box[1])
    areas = (others[:, 2] - others[:, 0]) * (others[:, 3] - others[:, 1])
    union = area + areas - inter
    out = np.zeros(len(others), dtype=np.float64)
    nz = union > 0.0
    out[nz] = inter[nz] / union[nz]
    return out


def filter_and_nms(
    dets: list[Detection], conf_thresh: float, iou_thresh: float, max_det: int
) -> list[Detection]:
    """Greedy NMS: score descending, ties by anchor index ascending.

    Keeps a detection unless its box IoU with an already kept one exceeds
    iou_thresh (strictly). Output order is the pick order, truncated to
    max_det; the result depends only on the (box, score, anchor) multiset.
    """
    alive_dets = sorted(
        (d for d in dets if d.score >= conf_thresh),
        key=lambda d: (-d.score, d.anchor_index, d.box.x1, d.box.y1, d.box.x2, d.box.y2),
    )
    if not alive_dets:
        return []
    boxes = np.array([d.box.to_list() for d in alive_dets], dtype=np.float64)
    alive = np.ones(len(alive_dets), dtype=bool)
    kept: list[Detection] = []
    for i in range(len(alive_dets)):
        if not alive[i]:
            continue
        kept.append(alive_dets[i])
        if len(kept) >= max_det:
            break
        rest = np.flatnonzero(alive[i + 1 :]) + i + 1
        if rest.size:
            iou = _pairwise_iou_row(boxes[i], boxes[rest])
            alive[rest[iou > iou_thresh]] = False
    return kept


def _crop_bounds(box: BoundingBox, width: int, height: int) -> tuple[int, int, int, int]:
    """Integer pixel range [x0, x1) x [y0, y1) covered by a box."""
    x0 = max(int(np.floor(box.x1)), 0)
    y0 = max(int(np.floor(box.y1)), 0)
    x1 = min(int(np.ceil(box.x2)), width)
    y1 = min(int(np.ceil(box.y2)), height)
    return x0, y0, x1, y1


def assemble_mask(
    coeffs: np.ndarray,
    prototypes: np.ndarray,
    box: BoundingBox,
    threshold: float = 0.5,
) -> tuple[BinaryMask, np.ndarray]:
    """Combine prototypes into one instance mask at 4x prototype resolution.

    prob = sigmoid(sum_i coeffs[i] * prototypes[i]) upsampled bilinearly,
    zeroed outside `box`, and thresholded strictly for the binary mask.
    """
    coeffs = np.asarray(coeffs, dtype=np.float64)
    protos = np.asarray(prototypes, dtype=np.float64)
    if coeffs.shape[0] != protos.shape[0]:
        raise DimensionMismatchError(
            f"{coeffs.shape[0]} coefficients vs {protos.shape[0]} prototypes"
        )
    logit_map = np.tensordot(coeffs, protos, axes=1)
    prob = bilinear_resize(sigmoid(logit_map), protos.shape[1] * 4, protos.shape[2] * 4)
    out_h, out_w = prob.shape
    clamped = box.clamped(float(out_w), float(out_h))
    x0, y0, x1, y1 = _crop_bounds(clamped, out_w, out_h)
    cropped = np.zeros_like(prob)
    cropped[y0:y1, x0:x1] = prob[y0:y1, x0:x1]
    return BinaryMask.from_array(cropped > threshold), cropped


def _instance_from_detection(
    det: Detection,
    prototypes: np.ndarray,
    pad: PadInfo,
    cfg: EngineConfig,
) -> ScoredInstance | None:
    """Windowed assembly straight to original resolution.

    Equivalent to assemble_mask at input resolution followed by bilinear
    sampling at original pixel centers, but only the pixels inside the
    detection box are ever computed.
    """
    size = cfg.input_size
    box_in = det.box.clamped(float(size), float(size))
    bx0, by0, bx1, by1 = _crop_bounds(box_in, size, size)
    if bx0 >= bx1 or by0 >= by1:
        return None

    # window = crop region plus a 1-px ring so sampling sees the falloff
    wx0, wy0 = max(bx0 - 1, 0), max(by0 - 1, 0)
    wx1, wy1 = min(bx1 + 1, size), min(by1 + 1, size)

    # quarter-res source indices needed by the window (edge-clamped)
    q = prototypes.shape[1]
    src_x = np.clip((np.arange(wx0, wx1, dtype=np.float64) + 0.5) / 4.0 - 0.5, 0.0, q - 1)
    src_y = np.clip((np.arange(wy0, wy1, dtype=np.float64) + 0.5) / 4.0 - 0.5, 0.0, q - 1)
    qx0, qx1 = int(np.floor(src_x[0])), min(int(np.floor(src_x[-1])) + 2, q)
    qy0, qy1 = int(np.floor(src_y[0])), min(int(np.floor(src_y[-1])) + 2, q)

    logit_win = np.tensordot(
        det.coeffs.astype(np.float64), prototypes[:, qy0:qy1, qx0:qx1].astype(np.float64), axes=1
    )
    prob_q = sigmoid(logit_win)

    lx0 = src_x - qx0
    ly0 = src_y - qy0
    ix0 = np.floor(lx0).astype(np.int64)
    iy0 = np.floor(ly0).astype(np.int64)
    fx, fy = lx0 - ix0, ly0 - iy0
    ix1 = np.minimum(ix0 + 1, prob_q.shape[1] - 1)
    iy1 = np.minimum(iy0 + 1, prob_q.shape[0] - 1)
    rows = prob_q[iy0] * (1.0 - fy)[:, None] + prob_q[iy1] * fy[:, None]
    window = rows[:, ix0] * (1.0 - fx) + rows[:, ix1] * fx

    # zero outside the crop region (the ring and any padding overhang)
    cx0, cy0 = bx0 - wx0, by0 - wy0
    crop = np.zeros_like(window)
    crop[cy0 : cy0 + (by1 - by0), cx0 : cx0 + (bx1 - bx0)] = window[
        cy0 : cy0 + (by1 - by0), cx0 : cx0 + (bx1 - bx0)
    ]

    # map to original resolution, cropping again at the original-frame box
    box_orig = pad.box_to_original(box_in).clamped(float(pad.orig_w), float(pad.orig_h))
    ox0, oy0, ox1, oy1 = _crop_bounds(box_orig, pad.orig_w, pad.orig_h)
    if ox0 >= ox1 or oy0 >= oy1:
        return None
    gx = (np.arange(ox0, ox1, dtype=np.float64) + 0.5) * pad.scale + pad.pad_x - 0.5 - wx0
    gy = (np.arange(oy0, oy1, dtype=np.float64) + 0.5) * pad.scale + pad.pad_y - 0.5 - wy0
    patch = bilinear_sample(crop, gy[:, None], gx[None, :])

    mask_patch = patch > cfg.mask_threshold
    count = int(mask_patch.sum())
    if count == 0 or count < cfg.min_mask_pixels:
        return None
    full = np.zeros((pad.orig_h, pad.orig_w), dtype=bool)
    full[oy0:oy1, ox0:ox1] = mask_patch
    return ScoredInstance(
        box=box_orig,
        score=det.score,
        mask=BinaryMask.from_array(full),
        prob_patch=patch.astype(np.float32),
        patch_origin=(ox0, oy0),
        anchor_index=det.anchor_index,
    )


def segment_everything(
    image: bytes | np.ndarray,
    backend: InferenceBackend,
    cfg: EngineConfig | None = None,
    image_id: str | None = None,
) -> SegmentCache:
    """Run the full stage-one pipeline on one image."""
    cfg = cfg or EngineConfig()
    if isinstance(image, (bytes, bytearray)):
        img = decode_image(bytes(image))
    else:
        img = np.asarray(image)
        if img.ndim != 3 or img.shape[2] != 3:
            raise InputFormatError(f"expected RGB (H, W, 3) array, got {img.shape}")
        img = img.astype(np.uint8)
    if image_id is None:
        image_id = hashlib.sha1(img.tobytes()).hexdigest()[:16]

    tensor, pad = preprocess_array(img, cfg.input_size)
    raw = backend.infer(tensor, pad)
    dets = decode_detections(raw, cfg.conf_thresh, cfg.reg_max, cfg.input_size)
    dets = filter_and_nms(dets, cfg.conf_thresh, cfg.iou_thresh, cfg.max_det)

    instances = []
    for det in dets:
        inst = _instance_from_detection(det, raw.prototypes, pad, cfg)
        if inst is not None:
            instances.append(inst)
    instances.sort(key=lambda r: (-r.score, r.anchor_index))
    return SegmentCache(
        image_id=image_id,
        pad=pad,
        instances=tuple(instances),
        prototypes=raw.prototypes,
        image=img,
    )


def cache_to_dict(cache: SegmentCache) -> dict:
    """Everything-mode dump: boxes, scores, and compressed-RLE masks.

    Schema: {"image_id", "width", "height", "instances": [{"index", "box"
    [x1,y1,x2,y2], "score", "anchor_index", "mask": {"size": [h,w],
    "counts": str}}]}.
    """
    return {
        "image_id": cache.image_id,
        "width": cache.width,
        "height": cache.height,
        "instances": [
            {
                "index": i,
                "box": inst.box.to_list(),
                "score": inst.score,
                "anchor_index": inst.anchor_index,
                "mask": mask_to_coco(inst.mask),
            }
            for i, inst in enumerate(cache.instances)
        ],
    }
