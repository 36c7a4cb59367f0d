from .coco import (
    AnnotationSet,
    GroundTruth,
    Proposal,
    ProposalSet,
    area_bucket,
    load_coco_json,
    load_proposals,
)
from .edges import default_tolerance, edge_metrics, match_boundaries
from .proposals import (
    AR_THRESHOLDS,
    ProposalMatcher,
    average_recall,
    evaluate_proposals,
    proposal_auc,
    recall_at,
)

__all__ = [
    "AnnotationSet",
    "GroundTruth",
    "Proposal",
    "ProposalSet",
    "area_bucket",
    "load_coco_json",
    "load_proposals",
    "default_tolerance",
    "edge_metrics",
    "match_boundaries",
    "AR_THRESHOLDS",
    "ProposalMatcher",
    "average_recall",
    "evaluate_proposals",
    "proposal_auc",
    "recall_at",
]
