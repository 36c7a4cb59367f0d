"""Object-proposal recall: AR@k over IoU 0.50:0.05:0.95 and recall-curve AUC.

Matching is greedy and one-to-one: ground-truth objects are visited in file
order and each takes the highest-IoU still-unmatched proposal from the top-k
ranking, provided the IoU clears the threshold.
"""

from __future__ import annotations

import numpy as np

from ..errors import InputFormatError
from ..geometry import box_iou
from ..masks import mask_iou
from .coco import BUCKETS, AnnotationSet, ProposalSet, area_bucket

AR_THRESHOLDS = tuple((50 + 5 * i) / 100 for i in range(10))
AUC_CURVE_THRESHOLDS = AR_THRESHOLDS + (1.0,)


def _image_iou_matrix(gts, props, kind: str) -> np.ndarray:
    """(num_gt, num_proposals) IoU matrix for one image."""
    matrix = np.zeros((len(gts), len(props)), dtype=np.float64)
    for g, gt in enumerate(gts):
        for p, prop in enumerate(props):
            if kind == "box":
                matrix[g, p] = box_iou(gt.box, prop.box)
            else:
                if gt.mask is None or prop.mask is None:
                    raise InputFormatError(
                        "mask recall requires masks on both ground truth and proposals"
                    )
                matrix[g, p] = mask_iou(gt.mask, prop.mask)
    return matrix


def _greedy_matched(iou: np.ndarray, k: int, threshold: float, gt_keep) -> int:
    """One-to-one greedy matches among the top-k proposals."""
    if iou.size == 0:
        return 0
    cols = min(k, iou.shape[1])
    used = np.zeros(cols, dtype=bool)
    matched = 0
    for g in range(iou.shape[0]):
        if not gt_keep[g]:
            continue
        row = iou[g, :cols].copy()
        row[used] = -1.0
        best = int(np.argmax(row)) if cols else 0
        if cols and row[best] >= threshold:
            used[best] = True
            matched += 1
    return matched


class ProposalMatcher:
    """Caches per-image IoU matrices so k/threshold/bucket sweeps are cheap."""

    def __init__(self, proposals: ProposalSet, annotations: AnnotationSet, kind: str = "box"):
        if kind not in ("box", "mask"):
            raise InputFormatError(f"kind must be box or mask, not {kind!r}")
        self.annotations = annotations
        self.proposals = proposals
        self._per_image = []
        for img_id, gts in annotations.by_image.items():
            props = proposals.by_image.get(img_id, [])
            self._per_image.append(
                (gts, _image_iou_matrix(gts, props, kind))
            )

    def recall_at(self, k: int, thresholds, bucket: str = "all") -> list[float]:
        if k < 1:
            raise InputFormatError(f"k must be >= 1, got {k}")
        thresholds = list(thresholds)
        total_gt = 0
        matched = np.zeros(len(thresholds), dtype=np.int64)
        for gts, iou in self._per_image:
            keep = [bucket == "all" or area_bucket(g.area) == bucket for g in gts]
            total_gt += sum(keep)
            for t_idx, t in enumerate(thresholds):
                matched[t_idx] += _greedy_matched(iou, k, t, keep)
        if total_gt == 0:
            return [0.0 for _ in thresholds]
        return [m / total_gt for m in matched.tolist()]

    def average_recall(self, k: int, bucket: str = "all") -> float:
        return float(np.mean(self.recall_at(k, AR_THRESHOLDS, bucket)))

    def auc(self, k: int = 1000, bucket: str = "all") -> float:
        """Normalized trapezoidal area of the recall-vs-threshold curve.

        Curve points are the ten AR thresholds plus the 1.0 endpoint; the
        area is divided by the swept interval so a flat recall of 1 gives
        exactly 1.0.
        """
        recalls = self.recall_at(k, AUC_CURVE_THRESHOLDS, bucket)
        ts = np.asarray(AUC_CURVE_THRESHOLDS)
        widths = np.diff(ts)
        segments = widths * (np.asarray(recalls[:-1]) + np.asarray(recalls[1:])) / 2.0
        return float(segments.sum() / widths.sum())


def recall_at(proposals, annotations, k, thresholds, kind="box", bucket="all"):
    return ProposalMatcher(proposals, annotations, kind).recall_at(k, thresholds, bucket)


def average_recall(proposals, annotations, k, kind="box", bucket="all"):
    return ProposalMatcher(proposals, annotations, kind).average_recall(k, bucket)


def proposal_auc(proposals, annotations, k=1000, kind="box", bucket="all"):
    return ProposalMatcher(proposals, annotations, kind).auc(k, bucket)


def evaluate_proposals(
    proposals: ProposalSet,
    annotations: AnnotationSet,
    ks=(10, 100, 1000),
    kind: str = "box",
    buckets=BUCKETS,
) -> dict:
    """Full report: AR@k per bucket, AUC, and the raw recall curves."""
    matcher = ProposalMatcher(proposals, annotations, kind)
    report = {
        "kind": kind,
        "thresholds": list(AR_THRESHOLDS),
        "auc_curve_thresholds": list(AUC_CURVE_THRESHOLDS),
        "total_objects": annotations.total_objects,
        "average_recall": {},
        "auc": matcher.auc(max(ks)),
        "recall_curves": {},
    }
    for bucket in buckets:
        report["average_recall"][bucket] = {
            f"AR@{k}": matcher.average_recall(k, bucket) for k in ks
        }
    for k in ks:
        report["recall_curves"][f"k={k}"] = matcher.recall_at(k, AR_THRESHOLDS)
    return report
