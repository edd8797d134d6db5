"""Topic segmentation by enumerated, overlapping, recursive LLM prompting,
with embedding baselines and boundary-similarity evaluation."""
from .estimators import GraphSegmenter, LLMSegmenter, SplitEveryK, TroughSegmenter, check_documents
from .metrics import boundary_precision_recall, boundary_similarity, match_boundaries, pk, window_diff
from .text import Document, Segmentation, SentenceIndex, render_enumerated, split_sentences
from .windowing import WindowConfig, plan_windows

__version__ = "0.1.0"

__all__ = [
    "Document",
    "GraphSegmenter",
    "LLMSegmenter",
    "Segmentation",
    "SentenceIndex",
    "SplitEveryK",
    "TroughSegmenter",
    "WindowConfig",
    "boundary_precision_recall",
    "boundary_similarity",
    "check_documents",
    "match_boundaries",
    "pk",
    "plan_windows",
    "render_enumerated",
    "split_sentences",
    "window_diff",
]
