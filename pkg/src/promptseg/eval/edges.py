"""Edge-detection metrics: ODS, OIS, AP, and R50 over a threshold sweep.

Predicted edge pixels are matched one-to-one to ground-truth boundary pixels
within a pixel tolerance, greedily in scan order (an approximation of the
full BSDS correspondence problem; see README). Precision with zero predicted
pixels is defined as 0 so empty predictions score 0 everywhere.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.spatial import cKDTree

from ..errors import DimensionMismatchError

NUM_SWEEP_THRESHOLDS = 50
SWEEP_THRESHOLDS = tuple((i + 1) / NUM_SWEEP_THRESHOLDS for i in range(NUM_SWEEP_THRESHOLDS))


def default_tolerance(width: int, height: int) -> int:
    """max(2, 0.0075 * image diagonal), in whole pixels."""
    return max(2, round(0.0075 * math.hypot(width, height)))


def match_boundaries(pred: np.ndarray, gt: np.ndarray, tolerance: float) -> tuple[int, int, int]:
    """Greedy one-to-one matching of boundary pixels within `tolerance`.

    Returns (matched, num_pred, num_gt). Predicted pixels are visited in
    row-major order; each takes its nearest still-unmatched ground-truth
    pixel within the tolerance radius.
    """
    pred = np.asarray(pred, dtype=bool)
    gt = np.asarray(gt, dtype=bool)
    if pred.shape != gt.shape:
        raise DimensionMismatchError(f"prediction {pred.shape} vs ground truth {gt.shape}")
    pred_pts = np.argwhere(pred)
    gt_pts = np.argwhere(gt)
    if len(pred_pts) == 0 or len(gt_pts) == 0:
        return 0, len(pred_pts), len(gt_pts)
    tree = cKDTree(gt_pts)
    taken = np.zeros(len(gt_pts), dtype=bool)
    matched = 0
    neighbor_lists = tree.query_ball_point(pred_pts, r=tolerance)
    for p_idx, neighbors in enumerate(neighbor_lists):
        if not neighbors:
            continue
        dists = np.linalg.norm(gt_pts[neighbors] - pred_pts[p_idx], axis=1)
        for n_idx in np.argsort(dists, kind="stable"):
            g = neighbors[n_idx]
            if not taken[g]:
                taken[g] = True
                matched += 1
                break
    return matched, len(pred_pts), len(gt_pts)


def _prf(matched: float, num_pred: float, num_gt: float) -> tuple[float, float, float]:
    precision = matched / num_pred if num_pred > 0 else 0.0
    recall = matched / num_gt if num_gt > 0 else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
    return precision, recall, f1


def edge_metrics(
    predictions: list[np.ndarray],
    ground_truths: list[np.ndarray],
    tolerance: float | None = None,
) -> dict:
    """Sweep 50 thresholds and report ODS, OIS, AP, R50 plus the P-R curve.

    `predictions` are strength maps in [0, 1]; `ground_truths` are boolean
    boundary maps of the same shapes. ODS uses one dataset-wide threshold,
    OIS the best threshold per image, AP the area under the dataset P-R
    curve, and R50 the best recall among sweep points with precision >= 0.5.
    """
    if len(predictions) != len(ground_truths):
        raise DimensionMismatchError(
            f"{len(predictions)} predictions vs {len(ground_truths)} ground truths"
        )
    n_t = len(SWEEP_THRESHOLDS)
    dataset = np.zeros((n_t, 3), dtype=np.float64)  # matched, n_pred, n_gt
    per_image_best_f = []
    for pred, gt in zip(predictions, ground_truths):
        pred = np.asarray(pred, dtype=np.float64)
        gt = np.asarray(gt, dtype=bool)
        if pred.shape != gt.shape:
            raise DimensionMismatchError(f"prediction {pred.shape} vs ground truth {gt.shape}")
        tol = tolerance if tolerance is not None else default_tolerance(
            pred.shape[1], pred.shape[0]
        )
        best_f = 0.0
        for t_idx, t in enumerate(SWEEP_THRESHOLDS):
            counts = match_boundaries(pred >= t, gt, tol)
            dataset[t_idx] += counts
            best_f = max(best_f, _prf(*counts)[2])
        per_image_best_f.append(best_f)

    curve = [_prf(*dataset[t_idx]) for t_idx in range(n_t)]
    precisions = np.array([c[0] for c in curve])
    recalls = np.array([c[1] for c in curve])
    f1s = np.array([c[2] for c in curve])

    ods = float(f1s.max()) if n_t else 0.0
    ois = float(np.mean(per_image_best_f)) if per_image_best_f else 0.0

    # AP: trapezoid over the dataset P-R curve, anchored at recall 0
    order = np.argsort(recalls, kind="stable")
    r_sorted = np.concatenate(([0.0], recalls[order]))
    p_sorted = np.concatenate(([precisions[order][0] if n_t else 0.0], precisions[order]))
    ap = float(np.trapezoid(p_sorted, r_sorted))

    eligible = recalls[precisions >= 0.5]
    r50 = float(eligible.max()) if eligible.size else 0.0

    return {
        "ODS": ods,
        "OIS": ois,
        "AP": ap,
        "R50": r50,
        "thresholds": list(SWEEP_THRESHOLDS),
        "precision": precisions.tolist(),
        "recall": recalls.tolist(),
        "f1": f1s.tolist(),
    }
