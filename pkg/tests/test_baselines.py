import random

import numpy as np
import pytest
from hypothesis import given, strategies as st

from topicseg.baselines import (
    graph_segmenter,
    length_postprocess,
    majority_repair,
    similarity_series,
    split_every_k,
    trough_boundaries,
)
from topicseg.estimators import GraphSegmenter, SplitEveryK, TroughSegmenter
from topicseg.embeddings import PrecomputedEmbeddings
from topicseg.exceptions import DimensionMismatch
from topicseg.text import Document, Segmentation, split_sentences

from conftest import topical_sentence


def test_split_every_k():
    assert split_every_k(23, 5).boundaries == (5, 10, 15, 20)
    assert split_every_k(5, 5).boundaries == ()
    assert split_every_k(1, 5).boundaries == ()
    with pytest.raises(ValueError):
        split_every_k(5, 0)


@given(st.integers(1, 500), st.integers(1, 50))
def test_split_every_k_size(S, k):
    assert len(split_every_k(S, k).boundaries) == (S - 1) // k


def test_identical_sentences_series_is_one():
    emb = np.ones((5, 3))
    assert np.allclose(similarity_series(emb), 1.0)


def test_orthogonal_neighbours_window_one():
    emb = np.array([[1.0, 0.0], [0.0, 1.0], [0.0, 1.0]])
    assert list(similarity_series(emb, window=1)) == [0.0, 1.0]


def test_series_three_sentence_fixture():
    emb = np.array([[2.0, 0.0], [3.0, 4.0], [0.0, 0.5]])
    got = similarity_series(emb, window=2)
    assert abs(got[0] - 0.6) < 1e-9
    assert abs(got[1] - 0.8 / 1.5) < 1e-9


def test_series_custom_weights_and_errors():
    emb = np.array([[1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
    got = similarity_series(emb, window=2, weights=[1.0, 1.0])
    assert got[1] == pytest.approx((np.sqrt(0.5) + 0.0) / 2)
    with pytest.raises(DimensionMismatch):
        similarity_series(emb, window=2, weights=[1.0])
    with pytest.raises(DimensionMismatch):
        similarity_series(np.ones(3))


def test_trough_rules():
    assert trough_boundaries([0.3, 0.5, 0.9]).boundaries == ()
    assert trough_boundaries([0.9, 0.1, 0.8]).boundaries == (2,)
    assert trough_boundaries([0.2, 0.2, 0.2]).boundaries == (1,)
    assert trough_boundaries([0.1, 0.5, 0.2]).boundaries == (1, 3)


@given(st.lists(st.floats(-1, 1), min_size=1, max_size=40), st.floats(-1, 1), st.floats(-1, 1))
def test_trough_monotone_in_threshold(series, a, b):
    lo, hi = sorted((a, b))
    assert set(trough_boundaries(series, lo).boundaries) <= set(trough_boundaries(series, hi).boundaries)


def _index(words):
    rng = random.Random(0)
    return split_sentences(" ".join(topical_sentence(rng, 0, w) for w in words))


def test_postprocess_fixpoint_and_split():
    idx = _index([10] * 12)
    seg = Segmentation(12, (6,))
    series = [0.5] * 11
    assert length_postprocess(idx, seg, series, 50, 500) == seg
    series[8] = -0.2  # unique minimum inside the second segment
    assert length_postprocess(idx, Segmentation(12), series, 10, 90).boundaries == (9,)


def test_postprocess_merges_short_edges():
    idx = _index([10] * 12)
    series = [0.5] * 11
    assert length_postprocess(idx, Segmentation(12, (1,)), series, 50, 500).boundaries == ()
    series[5], series[7] = 0.1, 0.9
    # middle segment 7..8 is short; its right boundary (8) is more similar
    out = length_postprocess(idx, Segmentation(12, (6, 8)), series, 25, 500)
    assert out.boundaries == (6,)


def test_majority_repair_flips_outlier():
    assert majority_repair([0, 0, 0, 1, 0, 0, 2, 2, 2, 2]) == [0] * 6 + [2] * 4


def test_graph_two_blocks():
    emb = np.array([[1.0, 0.0]] * 5 + [[0.0, 1.0]] * 4)
    assert graph_segmenter(emb).boundaries == (5,)


def test_graph_identical_embeddings():
    assert graph_segmenter(np.ones((12, 4))).boundaries == ()


def test_graph_noisy_member_repaired():
    emb = np.array([[1.0, 0.0]] * 8 + [[0.0, 1.0]] * 8)
    emb[3] = [0.0, 1.0]  # noisy member inside the first block
    assert graph_segmenter(emb, repair_radius=2).boundaries == (8,)


def test_estimators_with_precomputed_embeddings():
    text = " ".join(topical_sentence(random.Random(i), 0) for i in range(6))
    emb = np.array([[1.0, 0.0]] * 3 + [[0.0, 1.0]] * 3)
    provider = PrecomputedEmbeddings.from_arrays({"d": emb})
    doc = Document("d", text)
    assert GraphSegmenter(provider).predict([doc])[0].boundaries == (3,)
    trough = TroughSegmenter(provider, window=1, min_words=1, max_words=1000)
    assert trough.predict([doc])[0].boundaries == (3,)
    assert len(trough.series(doc)) == 5
    assert SplitEveryK(2).predict([doc])[0].boundaries == (2, 4)
    assert SplitEveryK(k=3).get_params() == {"k": 3}


def test_hashing_default_embedder_runs():
    doc = Document("d", "Cats purr softly. Cats nap often. Rockets launch fast. Rockets burn fuel.")
    seg = TroughSegmenter(min_words=1, max_words=100).predict(doc)[0]
    assert seg.num_sentences == 4
