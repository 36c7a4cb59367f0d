"""Real-time promptable segmentation: cached all-instance masks plus cheap
point / box / text selection, with edge-map and proposal-recall pipelines."""

from .config import EngineConfig, ServiceConfig
from .engine import Engine
from .geometry import EMPTY_BOX, BoundingBox, box_iou
from .maskgen import (
    Detection,
    ScoredInstance,
    SegmentCache,
    assemble_mask,
    cache_to_dict,
    decode_dfl,
    filter_and_nms,
    segment_everything,
)
from .masks import BinaryMask, bbox_of, mask_iou
from .prompt import (
    BoxPrompt,
    PointsPrompt,
    PromptResult,
    TextPrompt,
    merge_masks,
    parse_prompt,
    select_by_box,
    select_by_points,
    select_by_text,
)
from .edge import EdgeMap, aggregate_prob, edge_nms, edges_for_image, sobel
from .rle import RleMask, mask_from_coco, mask_to_coco, rle_decode, rle_encode

__version__ = "0.1.0"

__all__ = [
    "EngineConfig",
    "ServiceConfig",
    "Engine",
    "EMPTY_BOX",
    "BoundingBox",
    "box_iou",
    "Detection",
    "ScoredInstance",
    "SegmentCache",
    "assemble_mask",
    "cache_to_dict",
    "decode_dfl",
    "filter_and_nms",
    "segment_everything",
    "BinaryMask",
    "bbox_of",
    "mask_iou",
    "BoxPrompt",
    "PointsPrompt",
    "PromptResult",
    "TextPrompt",
    "merge_masks",
    "parse_prompt",
    "select_by_box",
    "select_by_points",
    "select_by_text",
    "EdgeMap",
    "aggregate_prob",
    "edge_nms",
    "edges_for_image",
    "sobel",
    "RleMask",
    "mask_from_coco",
    "mask_to_coco",
    "rle_decode",
    "rle_encode",
    "__version__",
]
