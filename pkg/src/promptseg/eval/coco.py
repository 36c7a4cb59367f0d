"""COCO-style annotation and proposal ingestion, collapsed to class-agnostic.

Accepted mask encodings: compressed-string RLE, uncompressed integer-list
RLE, and polygon lists (rasterized immediately). Proposals load either from
COCO results-format JSON (a list of detection dicts) or from this package's
everything-mode dump ({"image_id", ..., "instances": [...]}).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import json

import numpy as np

from ..errors import MalformedRleError, SchemaError
from ..geometry import BoundingBox
from ..masks import BinaryMask
from ..rle import rle_decode, rle_from_coco
from ..backend.mock import rasterize_polygon

# COCO size buckets by pixel area
SMALL_MAX = 32.0**2
MEDIUM_MAX = 96.0**2
BUCKETS = ("all", "small", "medium", "large")


def area_bucket(area: float) -> str:
    if area < SMALL_MAX:
        return "small"
    if area < MEDIUM_MAX:
        return "medium"
    return "large"


@dataclass(frozen=True)
class GroundTruth:
    box: BoundingBox
    area: float
    mask: BinaryMask | None = None


@dataclass(frozen=True)
class Proposal:
    box: BoundingBox
    score: float
    mask: BinaryMask | None = None


@dataclass
class AnnotationSet:
    sizes: dict = field(default_factory=dict)  # image_id -> (width, height)
    by_image: dict = field(default_factory=dict)  # image_id -> list[GroundTruth]

    @property
    def total_objects(self) -> int:
        return sum(len(v) for v in self.by_image.values())


@dataclass
class ProposalSet:
    by_image: dict = field(default_factory=dict)  # image_id -> list[Proposal], score desc


def _require(obj: dict, key: str, path: str):
    if key not in obj:
        raise SchemaError(f"missing key {key!r}", path)
    return obj[key]


def _decode_segmentation(seg, width: int, height: int, path: str) -> BinaryMask:
    if isinstance(seg, dict):
        try:
            rle = rle_from_coco(seg)
        except MalformedRleError as exc:
            raise SchemaError(str(exc), path) from exc
        if (rle.width, rle.height) != (width, height):
            raise SchemaError(
                f"RLE size {rle.width}x{rle.height} != image {width}x{height}", path
            )
        try:
            return rle_decode(rle)
        except MalformedRleError as exc:
            raise SchemaError(str(exc), path) from exc
    if isinstance(seg, list):
        union = np.zeros((height, width), dtype=bool)
        for poly in seg:
            if not isinstance(poly, list) or len(poly) < 6:
                raise SchemaError("polygon needs >= 3 (x, y) pairs", path)
            pts = [(poly[i], poly[i + 1]) for i in range(0, len(poly) - 1, 2)]
            part = rasterize_polygon(pts, width, height)
            union |= part
        return BinaryMask.from_array(union)
    raise SchemaError("segmentation must be an RLE object or polygon list", path)


def _load_json(path: str):
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise SchemaError(f"cannot read file: {exc}", "$") from exc
    except json.JSONDecodeError as exc:
        raise SchemaError(f"invalid JSON: {exc}", "$") from exc


def load_coco_json(path: str) -> AnnotationSet:
    """Load a COCO/LVIS-style annotation file as class-agnostic ground truth."""
    obj = _load_json(path)
    if not isinstance(obj, dict):
        raise SchemaError("annotation root must be an object", "$")
    images = _require(obj, "images", "$")
    annotations = _require(obj, "annotations", "$")
    out = AnnotationSet()
    for i, img in enumerate(images):
        p = f"$.images[{i}]"
        img_id = _require(img, "id", p)
        out.sizes[img_id] = (int(_require(img, "width", p)), int(_require(img, "height", p)))
        out.by_image.setdefault(img_id, [])
    for i, ann in enumerate(annotations):
        p = f"$.annotations[{i}]"
        img_id = _require(ann, "image_id", p)
        if img_id not in out.sizes:
            raise SchemaError(f"annotation references unknown image {img_id!r}", p)
        width, height = out.sizes[img_id]
        mask = None
        if "segmentation" in ann and ann["segmentation"]:
            mask = _decode_segmentation(ann["segmentation"], width, height, f"{p}.segmentation")
        if "bbox" in ann:
            box = BoundingBox.from_xywh(ann["bbox"])
        elif mask is not None:
            from ..masks import bbox_of

            box = bbox_of(mask)
        else:
            raise SchemaError("annotation needs bbox or segmentation", p)
        area = float(ann.get("area", mask.popcount if mask is not None else box.area))
        out.by_image[img_id].append(GroundTruth(box=box, area=area, mask=mask))
    return out


def _proposal_sort_key(p: Proposal):
    return (-p.score, p.box.x1, p.box.y1, p.box.x2, p.box.y2)


def load_proposals(path: str, annotations: AnnotationSet | None = None) -> ProposalSet:
    """Load ranked proposals; masks decoded when a segmentation is present.

    When `annotations` is given, every proposal image id must exist there.
    """
    obj = _load_json(path)
    if isinstance(obj, dict) and "instances" in obj:
        entries = [
            {
                "image_id": obj.get("image_id", 0),
                "bbox": BoundingBox.from_list(inst["box"]).to_xywh(),
                "score": inst["score"],
                "segmentation": inst.get("mask"),
                "_size": (obj.get("width"), obj.get("height")),
            }
            for inst in obj["instances"]
        ]
    elif isinstance(obj, list):
        entries = obj
    else:
        raise SchemaError("proposals must be a results list or an everything dump", "$")
    out = ProposalSet()
    for i, det in enumerate(entries):
        p = f"$[{i}]"
        img_id = _require(det, "image_id", p)
        if annotations is not None and img_id not in annotations.sizes:
            raise SchemaError(f"proposal references unknown image {img_id!r}", p)
        score = float(_require(det, "score", p))
        mask = None
        seg = det.get("segmentation")
        if seg:
            if annotations is not None:
                width, height = annotations.sizes[img_id]
            elif det.get("_size") and None not in det["_size"]:
                width, height = det["_size"]
            elif isinstance(seg, dict) and "size" in seg:
                height, width = seg["size"]
            else:
                raise SchemaError("cannot infer image size for segmentation", p)
            mask = _decode_segmentation(seg, int(width), int(height), f"{p}.segmentation")
        if "bbox" in det:
            box = BoundingBox.from_xywh(det["bbox"])
        elif mask is not None:
            from ..masks import bbox_of

            box = bbox_of(mask)
        else:
            raise SchemaError("proposal needs bbox or segmentation", p)
        out.by_image.setdefault(img_id, []).append(Proposal(box=box, score=score, mask=mask))
    for props in out.by_image.values():
        props.sort(key=_proposal_sort_key)
    return out
