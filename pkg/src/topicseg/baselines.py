"""Non-LLM segmenters: fixed stride, similarity troughs and graph clustering.

All functions work on precomputed sentence embeddings (an ``(S, d)`` array);
the estimator wrappers in :mod:`topicseg.estimators` fetch them from an
:class:`~topicseg.embeddings.EmbeddingProvider`.
"""
from __future__ import annotations

from collections import Counter
from itertools import accumulate
from typing import Sequence

import networkx as nx
import numpy as np

from .exceptions import DimensionMismatch
from .text import SentenceIndex, Segmentation, word_count

# float noise allowed when comparing edge weights
_TOL = 1e-9


def split_every_k(S: int, k: int = 5) -> Segmentation:
    """Boundary after every k-th sentence."""
    if S < 1 or k < 1:
        raise ValueError("need S >= 1 and k >= 1")
    return Segmentation(S, tuple(range(k, S, k)))


def _unit_rows(embeddings: np.ndarray) -> np.ndarray:
    emb = np.asarray(embeddings, dtype=np.float64)
    if emb.ndim != 2:
        raise DimensionMismatch(f"embeddings must be 2-D, got shape {emb.shape}")
    norms = np.linalg.norm(emb, axis=1, keepdims=True)
    return np.divide(emb, norms, out=np.zeros_like(emb), where=norms > 0)


def geometric_weights(window: int, decay: float = 0.5) -> np.ndarray:
    return decay ** np.arange(window, dtype=np.float64)


def similarity_series(
    embeddings: np.ndarray,
    window: int = 5,
    weights: Sequence[float] | None = None,
    decay: float = 0.5,
) -> np.ndarray:
    """Weighted cosine similarity of each sentence to the ones before it.

    Entry ``i - 1`` scores boundary ``i``: the similarity of sentence ``i+1``
    to sentences ``i, i-1, ..`` (up to ``window`` back), weighted by
    ``weights[j-1]`` for lag ``j`` and renormalised over the lags that exist.
    """
    unit = _unit_rows(embeddings)
    S = unit.shape[0]
    if S < 2:
        raise ValueError("need at least two sentences")
    w = geometric_weights(window, decay) if weights is None else np.asarray(weights, dtype=np.float64)
    if w.shape != (window,):
        raise DimensionMismatch(f"{w.shape[0]} weights for window {window}")
    out = np.empty(S - 1)
    for i in range(1, S):
        lags = min(window, i)
        sims = unit[i - lags:i][::-1] @ unit[i]  # lag 1 first
        out[i - 1] = np.dot(w[:lags], sims) / w[:lags].sum()
    return np.clip(out, -1.0, 1.0)


def trough_boundaries(series: Sequence[float], threshold: float = 0.3) -> Segmentation:
    """Boundaries at sub-threshold local minima of a similarity series.

    A position is a minimum if it is no greater than each neighbour that
    exists. On a plateau only the first position is kept.
    """
    v = list(series)
    out = []
    for i, x in enumerate(v):
        if x >= threshold:
            continue
        if i > 0 and v[i - 1] <= x:
            continue
        if i + 1 < len(v) and v[i + 1] < x:
            continue
        out.append(i + 1)
    return Segmentation(len(v) + 1, tuple(out))


def length_postprocess(
    index: SentenceIndex,
    seg: Segmentation,
    series: Sequence[float],
    min_words: int = 50,
    max_words: int = 500,
    max_rounds: int = 4,
) -> Segmentation:
    """Split over-long segments at their weakest link, then merge short ones.

    Long segments are cut at the interior boundary with the lowest series
    value. Short segments join the neighbour across the more similar boundary.
    """
    words = (0,) + tuple(accumulate(word_count(s) for s in index.sentences))
    n_words = lambda s, e: words[e] - words[s - 1]  # noqa: E731
    sim = list(series)
    if len(sim) != seg.num_sentences - 1:
        raise DimensionMismatch(f"series has {len(sim)} values for {seg.num_sentences} sentences")

    for _ in range(max_rounds):
        before = seg
        todo = [r for r in seg.ranges() if n_words(*r) > max_words and r[0] < r[1]]
        while todo:
            s, e = todo.pop()
            b = min(range(s, e), key=lambda x: (sim[x - 1], x))
            seg = seg.with_boundary(b)
            todo += [r for r in ((s, b), (b + 1, e)) if n_words(*r) > max_words and r[0] < r[1]]
        while seg.n_segments > 1:
            ranges = seg.ranges()
            short = [i for i, r in enumerate(ranges) if n_words(*r) < min_words]
            if not short:
                break
            i = short[0]
            s, e = ranges[i]
            if i == 0:
                seg = seg.without_boundary(e)
            elif i == len(ranges) - 1:
                seg = seg.without_boundary(s - 1)
            else:
                left, right = sim[s - 2], sim[e - 1]
                seg = seg.without_boundary(s - 1 if left >= right else e)
        if seg == before:
            break
    return seg


def majority_repair(labels: Sequence[int], radius: int = 2, max_passes: int = 10) -> list[int]:
    """Replace each label by the most common label within ``radius`` positions.

    Ties keep the current label. Repeats until stable.
    """
    cur = list(labels)
    for _ in range(max_passes):
        nxt = []
        for i, lab in enumerate(cur):
            counts = Counter(cur[max(0, i - radius):i + radius + 1])
            best = max(counts.values())
            if counts[lab] == best:
                nxt.append(lab)
            else:
                # earliest label in the window among the most common, for determinism
                window = cur[max(0, i - radius):i + radius + 1]
                nxt.append(next(x for x in window if counts[x] == best))
        if nxt == cur:
            break
        cur = nxt
    return cur


def similarity_graph(embeddings: np.ndarray, edge_threshold: float, max_distance: int = 10) -> nx.Graph:
    unit = _unit_rows(embeddings)
    S = unit.shape[0]
    g = nx.Graph()
    g.add_nodes_from(range(S))
    for i in range(S):
        hi = min(S, i + max_distance + 1)
        sims = unit[i + 1:hi] @ unit[i]
        for off, s in enumerate(sims, 1):
            if s >= edge_threshold:
                g.add_edge(i, i + off, weight=float(s))
    return g


def cluster_labels(g: nx.Graph, seed: int = 0, max_iter: int = 50) -> list[int]:
    """Component labels after pruning weak links between communities.

    Each round finds Louvain communities and, for every pair of communities,
    removes the lowest-weight edge between them if it is weaker than the mean
    internal edge weight of both. Stops once no such edge is left.
    """
    g = g.copy()
    for _ in range(max_iter):
        communities = nx.community.louvain_communities(g, weight="weight", seed=seed)
        owner = {n: k for k, c in enumerate(communities) for n in c}
        internal: dict[int, list[float]] = {}
        weakest: dict[tuple[int, int], tuple[float, int, int]] = {}
        for u, v, w in g.edges(data="weight"):
            cu, cv = owner[u], owner[v]
            if cu == cv:
                internal.setdefault(cu, []).append(w)
                continue
            key = (min(cu, cv), max(cu, cv))
            cand = (w, min(u, v), max(u, v))
            if key not in weakest or cand < weakest[key]:
                weakest[key] = cand
        cohesion = {k: float(np.mean(ws)) for k, ws in internal.items()}
        doomed = [
            (u, v) for (a, b), (w, u, v) in sorted(weakest.items())
            if w < min(cohesion.get(a, np.inf), cohesion.get(b, np.inf)) - _TOL
        ]
        if not doomed:
            break
        g.remove_edges_from(doomed)
    labels = [0] * g.number_of_nodes()
    comps = sorted((sorted(c) for c in nx.connected_components(g)), key=lambda c: c[0])
    for k, comp in enumerate(comps):
        for n in comp:
            labels[n] = k
    return labels


def graph_segmenter(
    embeddings: np.ndarray,
    edge_threshold: float = 0.5,
    max_distance: int = 10,
    repair_radius: int = 2,
    seed: int = 0,
) -> Segmentation:
    """Cluster a thresholded sentence-similarity graph, then make clusters contiguous.

    An approximation of graph-based segmentation: threshold graph within
    ``max_distance`` sentences, community-pruned connected components,
    majority-run repair of stray labels, boundaries wherever the label changes.
    """
    S = len(embeddings)
    if S < 2:
        raise ValueError("need at least two sentences")
    labels = cluster_labels(similarity_graph(embeddings, edge_threshold, max_distance), seed)
    labels = majority_repair(labels, repair_radius)
    return Segmentation(S, tuple(i for i in range(1, S) if labels[i] != labels[i - 1]))
