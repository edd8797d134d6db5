"""LLM prompting: providers, reply parsing, prompt assembly and the segmentation pipeline."""
from .gateway import ChatRequest, HTTPChatProvider, MockProvider, MockRule, ProviderConfig
from .parsing import IndexListResult, RunawayConfig, detect_runaway, parse_index_list, parse_single_index
from .segmenter import (
    SegmentationTrace,
    SegmenterConfig,
    build_recursive_prompt,
    build_segment_prompt,
    merge_target,
    segment_document,
    validate_segments,
)

__all__ = [
    "ChatRequest",
    "HTTPChatProvider",
    "IndexListResult",
    "MockProvider",
    "MockRule",
    "ProviderConfig",
    "RunawayConfig",
    "SegmentationTrace",
    "SegmenterConfig",
    "build_recursive_prompt",
    "build_segment_prompt",
    "detect_runaway",
    "merge_target",
    "parse_index_list",
    "parse_single_index",
    "segment_document",
    "validate_segments",
]
