"""scikit-learn style wrappers around every segmenter.

All segmenters are stateless: ``fit`` only validates its input, and
``predict`` maps a sequence of documents to one :class:`Segmentation` each.
``score`` is the mean boundary similarity against reference segmentations.
"""
from __future__ import annotations

from typing import Any, Iterable, Sequence

import numpy as np
from sklearn.base import BaseEstimator

from .baselines import graph_segmenter, length_postprocess, similarity_series, split_every_k, trough_boundaries
from .corpus import CorpusDocument
from .embeddings import EmbeddingProvider, HashingEmbeddings
from .llm.gateway import ChatProvider
from .llm.segmenter import SegmentationTrace, SegmenterConfig, segment_document
from .metrics import boundary_similarity
from .text import Document, Segmentation, split_sentences
from .windowing import WindowConfig


def check_documents(X: Any) -> list[Document]:
    """Coerce ``X`` to a list of :class:`Document`.

    Accepts a single string or document, or an iterable of strings,
    :class:`Document` or :class:`CorpusDocument` items. Strings get ids
    ``doc-0``, ``doc-1``, ...
    """
    if isinstance(X, (str, Document, CorpusDocument)):
        X = [X]
    if not isinstance(X, Iterable):
        raise TypeError(f"expected documents, got {type(X).__name__}")
    docs = []
    for i, x in enumerate(X):
        if isinstance(x, Document):
            docs.append(x)
        elif isinstance(x, CorpusDocument):
            docs.append(Document(x.id, x.text, x.reference))
        elif isinstance(x, str):
            docs.append(Document(f"doc-{i}", x))
        else:
            raise TypeError(f"item {i}: expected str or Document, got {type(x).__name__}")
    if not docs:
        raise ValueError("no documents given")
    return docs


def check_references(y: Any, docs: Sequence[Document]) -> list[Segmentation]:
    if y is None:
        refs = [d.reference for d in docs]
        if any(r is None for r in refs):
            raise ValueError("documents carry no reference segmentation and y is None")
        return refs
    refs = list(y)
    if len(refs) != len(docs):
        raise ValueError(f"{len(refs)} references for {len(docs)} documents")
    return [r if isinstance(r, Segmentation) else Segmentation.from_boundaries(*r) for r in refs]


class BaseSegmenter(BaseEstimator):
    def fit(self, X, y=None):
        check_documents(X)
        return self

    def predict(self, X) -> list[Segmentation]:
        return [self.segment(d) for d in check_documents(X)]

    def fit_predict(self, X, y=None) -> list[Segmentation]:
        return self.fit(X, y).predict(X)

    def score(self, X, y=None, n: int = 2) -> float:
        docs = check_documents(X)
        refs = check_references(y, docs)
        return float(np.mean([boundary_similarity(h, r, n) for h, r in zip(self.predict(docs), refs)]))

    def segment(self, doc: Document) -> Segmentation:
        raise NotImplementedError


class SplitEveryK(BaseSegmenter):
    def __init__(self, k: int = 5):
        self.k = k

    def segment(self, doc: Document) -> Segmentation:
        return split_every_k(split_sentences(doc.text).count, self.k)


class _EmbeddingSegmenter(BaseSegmenter):
    def _embed(self, doc: Document):
        index = split_sentences(doc.text)
        embedder = self.embedder if self.embedder is not None else HashingEmbeddings()
        return index, embedder.embed(doc.id, index.sentences)


class TroughSegmenter(_EmbeddingSegmenter):
    """Boundaries at troughs of a weighted look-back cosine similarity series,
    then length post-processing."""

    def __init__(
        self,
        embedder: EmbeddingProvider | None = None,
        window: int = 5,
        decay: float = 0.5,
        threshold: float = 0.3,
        min_words: int = 50,
        max_words: int = 500,
    ):
        self.embedder = embedder
        self.window = window
        self.decay = decay
        self.threshold = threshold
        self.min_words = min_words
        self.max_words = max_words

    def series(self, doc: Document) -> np.ndarray:
        index, emb = self._embed(doc)
        if index.count < 2:
            return np.zeros(0)
        return similarity_series(emb, self.window, decay=self.decay)

    def segment(self, doc: Document) -> Segmentation:
        index, emb = self._embed(doc)
        if index.count < 2:
            return Segmentation(1)
        series = similarity_series(emb, self.window, decay=self.decay)
        seg = trough_boundaries(series, self.threshold)
        return length_postprocess(index, seg, series, self.min_words, self.max_words)


class GraphSegmenter(_EmbeddingSegmenter):
    def __init__(
        self,
        embedder: EmbeddingProvider | None = None,
        edge_threshold: float = 0.5,
        max_distance: int = 10,
        repair_radius: int = 2,
        seed: int = 0,
    ):
        self.embedder = embedder
        self.edge_threshold = edge_threshold
        self.max_distance = max_distance
        self.repair_radius = repair_radius
        self.seed = seed

    def segment(self, doc: Document) -> Segmentation:
        index, emb = self._embed(doc)
        if index.count < 2:
            return Segmentation(1)
        return graph_segmenter(emb, self.edge_threshold, self.max_distance, self.repair_radius, self.seed)


class LLMSegmenter(BaseSegmenter):
    """Enumerated, windowed, recursively validated LLM segmentation.

    ``traces_`` holds the :class:`SegmentationTrace` of each document from the
    last ``predict`` call.
    """

    def __init__(
        self,
        provider: ChatProvider | None = None,
        window_budget: int = 3000,
        max_segment_tokens: int = 750,
        overlap: int | None = None,
        min_segment_words: int = 50,
        max_segment_words: int = 500,
        max_recursion_depth: int = 6,
        punctuation_ratio_limit: float = 0.20,
        few_shot_examples: Sequence | None = None,
        recursive_examples: Sequence | None = None,
        embedder: EmbeddingProvider | None = None,
        jobs: int = 1,
    ):
        self.provider = provider
        self.window_budget = window_budget
        self.max_segment_tokens = max_segment_tokens
        self.overlap = overlap
        self.min_segment_words = min_segment_words
        self.max_segment_words = max_segment_words
        self.max_recursion_depth = max_recursion_depth
        self.punctuation_ratio_limit = punctuation_ratio_limit
        self.few_shot_examples = few_shot_examples
        self.recursive_examples = recursive_examples
        self.embedder = embedder
        self.jobs = jobs

    def config(self) -> SegmenterConfig:
        extra = {}
        if self.few_shot_examples is not None:
            extra["few_shot_examples"] = tuple(self.few_shot_examples)
        if self.recursive_examples is not None:
            extra["recursive_examples"] = tuple(self.recursive_examples)
        return SegmenterConfig(
            window=WindowConfig(self.window_budget, self.max_segment_tokens, self.overlap),
            min_segment_words=self.min_segment_words,
            max_segment_words=self.max_segment_words,
            max_recursion_depth=self.max_recursion_depth,
            punctuation_ratio_limit=self.punctuation_ratio_limit,
            jobs=self.jobs,
            **extra,
        )

    def fit(self, X, y=None):
        self.config()
        return super().fit(X, y)

    def segment_with_trace(self, doc: Document) -> tuple[Segmentation, SegmentationTrace]:
        if self.provider is None:
            raise ValueError("LLMSegmenter needs a provider")
        return segment_document(doc, self.config(), self.provider, self.embedder)

    def segment(self, doc: Document) -> Segmentation:
        return self.segment_with_trace(doc)[0]

    def predict(self, X) -> list[Segmentation]:
        out, traces = [], []
        for doc in check_documents(X):
            seg, trace = self.segment_with_trace(doc)
            out.append(seg)
            traces.append(trace)
        self.traces_ = traces
        return out
