"""claimsift: detect posts that repeat fact-checked claims and rank the
claim corpus against them.

The pipeline runs in two stages: a binary gate that decides whether a
post discusses any verified claim at all, then a ranker that orders the
claim corpus by relevance for posts that pass. Everything model-shaped
sits behind ports, with deterministic local implementations and a wire
client for remote scorers.
"""

__version__ = "0.1.0"

from .corpus import (
    AnnotationPair,
    AnnotationStore,
    Claim,
    ClaimSet,
    IngestFilter,
    Label,
    Tweet,
    TweetKind,
    TweetSet,
    Verdict,
    default_ingest_filter,
    load_claims,
    load_tweets,
)
from .detection import (
    DetectionDataset,
    DetectionItem,
    build_detection_dataset,
    detect,
    evaluate_detector,
    oversample_minority,
    train_detector,
)
from .retrieval import (
    PipelineRecord,
    RetrievalDataset,
    RetrievalPair,
    hit_ratio_at_k,
    rank_claims,
    run_pipeline,
    sample_negatives,
)

__all__ = [
    "AnnotationPair",
    "AnnotationStore",
    "Claim",
    "ClaimSet",
    "DetectionDataset",
    "DetectionItem",
    "IngestFilter",
    "Label",
    "PipelineRecord",
    "RetrievalDataset",
    "RetrievalPair",
    "Tweet",
    "TweetKind",
    "TweetSet",
    "Verdict",
    "__version__",
    "build_detection_dataset",
    "default_ingest_filter",
    "detect",
    "evaluate_detector",
    "hit_ratio_at_k",
    "load_claims",
    "load_tweets",
    "oversample_minority",
    "rank_claims",
    "run_pipeline",
    "sample_negatives",
    "train_detector",
]
