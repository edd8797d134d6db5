"""Headline acceptance checks. Each test prints one PASS/FAIL line in the summary."""
from __future__ import annotations

import itertools
import json
import random
import time
from importlib import resources

import numpy as np
import pytest

from topicseg.baselines import similarity_series, split_every_k, trough_boundaries
from topicseg.cli import main
from topicseg.corpus import (
    CorpusDocument,
    FilterRules,
    apply_filters,
    dumps_record,
    make_concatenated,
)
from topicseg.llm.gateway import ChatRequest, MockProvider
from topicseg.llm.parsing import parse_index_list
from topicseg.llm.segmenter import SegmenterConfig, segment_document
from topicseg.metrics import boundary_precision_recall, boundary_similarity, match_boundaries, pk, window_diff
from topicseg.text import Document, Segmentation, segment_texts, split_sentences, word_count
from topicseg.windowing import WindowConfig, merge_window_boundaries, plan_windows

from conftest import topical_sentence
from oracles import oracle_k, oracle_pk_wd, oracle_scores

DATA = resources.files("topicseg.data")


# ---------------------------------------------------------------- criteria

@pytest.mark.acceptance("metric oracle equivalence (exhaustive S<=8)")
def test_metric_oracle_equivalence():
    t0 = time.perf_counter()
    checked = 0
    n = 2
    for S in range(1, 9):
        subsets = [c for r in range(S) for c in itertools.combinations(range(1, S), r)]
        for H in subsets:
            for R in subsets:
                hyp, ref = Segmentation(S, H), Segmentation(S, R)
                score, B, BP, BR = oracle_scores(H, R, n)
                m = match_boundaries(hyp, ref, n)
                assert m.score == score
                assert boundary_similarity(hyp, ref, n) == float(B)
                assert boundary_precision_recall(hyp, ref, n) == (float(BP), float(BR))
                checked += 1
    elapsed = time.perf_counter() - t0
    assert checked == sum(4 ** (S - 1) for S in range(1, 9))
    assert elapsed < 60, f"took {elapsed:.1f}s"


@pytest.mark.acceptance("metric spot values")
def test_metric_spot_values():
    S = 10
    assert boundary_similarity(Segmentation(S, (4,)), Segmentation(S, (5,)), 2) == 0.5
    same = Segmentation(S, (3, 7))
    assert boundary_similarity(same, same) == 1.0
    assert boundary_precision_recall(same, same) == (1.0, 1.0)
    assert boundary_similarity(Segmentation(S), Segmentation(S, (5,))) == 0.0
    assert boundary_precision_recall(Segmentation(S), Segmentation(S, (5,))) == (0.0, 0.0)
    assert boundary_precision_recall(Segmentation(S, (4, 6)), Segmentation(S, (5,))) == (0.25, 0.5)


@pytest.mark.acceptance("Pk/WD oracle (1000 random pairs)")
def test_pk_wd_oracle():
    rng = random.Random(11)
    for trial in range(1000):
        S = rng.randint(2, 30)
        interior = list(range(1, S))
        hyp = Segmentation.from_boundaries(S, rng.sample(interior, rng.randint(0, S - 1)))
        ref = Segmentation.from_boundaries(S, rng.sample(interior, rng.randint(0, S - 1)))
        k = None if trial % 2 == 0 else rng.randint(1, S + 2)
        want_pk, want_wd = oracle_pk_wd(hyp, ref, oracle_k(ref) if k is None else k)
        assert pk(hyp, ref, k) == float(want_pk), (hyp, ref, k)
        assert window_diff(hyp, ref, k) == float(want_wd), (hyp, ref, k)


def _adversarial_rule(seed: int):
    rng = random.Random(seed)

    def reply(req: ChatRequest) -> str:
        prompt = req.prompt
        target = prompt.rpartition("Text:")[2]
        top = target.count(" [") + 1
        kind = rng.choice(
            ["runaway", "dupes", "range", "empty", "blank", "garbage", "normal", "huge", "negative"]
        )
        if kind == "runaway":
            start = rng.randint(1, max(1, top // 2))
            return ", ".join(map(str, range(start, top + 40, rng.randint(1, 5))))
        if kind == "dupes":
            xs = [rng.randint(1, top) for _ in range(6)]
            return ", ".join(map(str, xs + xs))
        if kind == "range":
            return ", ".join(str(rng.randint(-5, top * 3)) for _ in range(5))
        if kind == "empty":
            return "none"
        if kind == "blank":
            return ""
        if kind == "garbage":
            return "I think the text changes topic near the middle."
        if kind == "huge":
            return str(10 ** 30)
        if kind == "negative":
            return "-3, 0"
        return ", ".join(map(str, sorted(rng.sample(range(1, top + 1), min(top, rng.randint(1, 4))))))

    return reply


def _generated_document(rng: random.Random, i: int) -> str:
    n = rng.choice([1, 3, 20, 80, 300])
    parts = []
    for j in range(n):
        sent = topical_sentence(rng, rng.randrange(4))
        if rng.random() < 0.05:
            sent = sent[:-1] + " été, café \U0001f600."
        if rng.random() < 0.05:
            sent = "12.5 | 33 | 41.2 | $$ %% ##."
        parts.append(sent)
        parts.append(rng.choice([" ", "  ", "\n", "\n\n", " \t", "\r\n"]) if j < n - 1 else "")
    lead = rng.choice(["", " ", "\n"])
    trail = rng.choice(["", "\n", "  \n"])
    return lead + "".join(parts) + trail


@pytest.mark.acceptance("unedited-text guarantee (200 docs, adversarial replies)")
def test_unedited_text_guarantee():
    rng = random.Random(5)
    cfg = SegmenterConfig(window=WindowConfig(window_budget=1500, max_segment_tokens=300))
    for i in range(200):
        text = _generated_document(rng, i)
        provider = MockProvider(rule=_adversarial_rule(i))
        seg, trace = segment_document(Document(f"d{i}", text), cfg, provider)
        index = split_sentences(text)
        pieces = segment_texts(index, seg)
        assert "".join(pieces).encode("utf-8") == text.encode("utf-8"), i
        assert seg.num_sentences == index.count
        assert trace.replay() == seg


@pytest.mark.acceptance("windowing arithmetic (W=3000, O=1500)")
def test_windowing_arithmetic():
    # 40 sentences of exactly 100 estimated tokens: 4000 tokens in all
    text = " ".join(f"Sentence number {i} is here." for i in range(1, 41))
    index = split_sentences(text)
    assert index.count == 40
    plan = plan_windows(index, WindowConfig(3000, 750), estimator=lambda s: 100)
    assert [(w.token_start, w.token_end) for w in plan] == [(0, 3000), (1500, 4000)]
    assert [(w.accept_start, w.accept_end) for w in plan] == [(0, 2250), (2250, 4000)]

    # window 1 holds sentences 1..30, window 2 sentences 16..40 (local 1 = global 16)
    w1 = Segmentation(30, (5, 12, 22, 23, 29))  # tokens 500 1200 2200 | 2300 2900 dropped
    w2 = Segmentation(25, (7, 8, 15, 20))  # global 22 dropped | 23 30 35 kept
    merged, dropped = merge_window_boundaries(plan, [w1, w2])
    assert merged.boundaries == (5, 12, 22, 23, 30, 35)
    assert dropped == 3


@pytest.mark.acceptance("validation fixpoint (100 docs, median mock, depth<=6)")
def test_validation_fixpoint():
    rng = random.Random(23)
    cfg = SegmenterConfig()
    flagged_any = 0
    for i in range(100):
        S = rng.randint(1, 160)
        sentences = []
        for _ in range(S):
            r = rng.random()
            if r < 0.03:
                sentences.append(topical_sentence(rng, 0, 600))  # one sentence above the limit
            elif r < 0.06:
                sentences.append("42 | 17.5 | 3.3 | 88 | 9.")
            else:
                sentences.append(topical_sentence(rng, rng.randrange(3)))
        text = " ".join(sentences)

        def window_reply(req, _rng=random.Random(i)):
            if "Pick the one marker" in req.prompt:
                top = req.prompt.rpartition("Text:")[2].count(" [") + 1
                return str(top // 2)
            return _rng.choice(["none", "3, 9", "1, 2, 3, 4, 5, 6, 7", "20, 40"])

        seg, trace = segment_document(Document(f"v{i}", text), cfg, MockProvider(rule=window_reply))
        index = split_sentences(text)
        flagged = {tuple(f["range"]) for f in trace.flags}
        flagged_any += bool(flagged)
        for s, e in seg.ranges():
            n = word_count(index.region(s, e))
            assert 50 <= n <= 500 or (s, e) in flagged, (i, s, e, n)
        assert trace.max_depth <= 6
        assert trace.replay() == seg
    assert flagged_any > 0  # the fixture exercises the flag path too


@pytest.mark.acceptance("runaway detection (pattern fires, 0/10000 false positives)")
def test_runaway_detection():
    S = 60
    pattern = [1, 15] + list(range(22, 124, 3))
    assert 76 in pattern and 121 in pattern
    assert parse_index_list(", ".join(map(str, pattern)), S - 1).runaway_detected
    elided = [1, 15, 22] + list(range(76, 122, 3))
    assert parse_index_list(", ".join(map(str, elided)), S - 1).runaway_detected

    rng = random.Random(3)
    false_positives = 0
    for trial in range(10_000):
        S = rng.randint(2, 200)
        top = S - 1
        if trial % 3 == 0:
            step = rng.randint(1, 5)
            start = rng.randint(1, top)
            values = list(range(start, top + 1, step))
        else:
            values = rng.sample(range(1, top + 1), rng.randint(1, min(top, 15)))
            if trial % 3 == 2:
                values.sort()
        res = parse_index_list(", ".join(map(str, values)), top)
        false_positives += res.runaway_detected
        assert res.dropped_out_of_range == 0
    assert false_positives == 0


@pytest.mark.acceptance("baseline determinism")
def test_baseline_determinism():
    assert split_every_k(23, 5).boundaries == (5, 10, 15, 20)

    rng = random.Random(17)
    for _ in range(1000):
        series = [round(rng.uniform(-1, 1), rng.choice([1, 3])) for _ in range(rng.randint(1, 40))]
        t1, t2 = sorted(rng.uniform(-1, 1) for _ in range(2))
        low = set(trough_boundaries(series, t1).boundaries)
        high = set(trough_boundaries(series, t2).boundaries)
        assert low <= high

    # cos(e2, e1) = 0.6, cos(e3, e2) = 0.8, cos(e3, e1) = 0; weights 1, 0.5
    emb = np.array([[2.0, 0.0], [3.0, 4.0], [0.0, 0.5]])
    got = similarity_series(emb, window=2)
    assert got[0] == pytest.approx(0.6, abs=1e-9)
    assert got[1] == pytest.approx((1 * 0.8 + 0.5 * 0.0) / 1.5, abs=1e-9)


def _corpus_doc(doc_id: str, seg_words: list[int], noise: bool = False) -> CorpusDocument:
    rng = random.Random(doc_id)
    bodies = []
    for w in seg_words:
        sents = []
        left = w
        while left > 0:
            n = min(left, 10)
            sents.append(topical_sentence(rng, len(bodies) % 5, n))
            left -= n
        if noise:
            sents.append("1999 2000 2001 2002 2003 2004 2005 2006 2007 2008 2009 2010.")
        bodies.append(" ".join(sents))
    text = "\n".join(bodies)
    counts = [split_sentences(b).count for b in bodies]
    bounds = list(itertools.accumulate(counts))[:-1]
    return CorpusDocument(doc_id, "wiki", text, Segmentation(sum(counts), tuple(bounds)))


@pytest.mark.acceptance("corpus filters and concat reproducibility")
def test_corpus_filters():
    rules = FilterRules()
    clean = _corpus_doc("clean", [30, 40, 25, 30, 35])
    assert apply_filters(clean, rules).kept

    few = apply_filters(_corpus_doc("few", [30, 30, 30]), rules)
    assert not few.kept and len(few.reasons) == 1 and few.reasons[0].startswith("too_few_segments")

    short = apply_filters(_corpus_doc("short", [30, 15, 30, 30]), rules)
    assert not short.kept and len(short.reasons) == 1 and short.reasons[0].startswith("short_segment")

    noisy_doc = _corpus_doc("noisy", [20, 20, 20, 20], noise=True)
    noisy = apply_filters(noisy_doc, rules)
    assert not noisy.kept and len(noisy.reasons) == 1 and noisy.reasons[0].startswith("non_alpha")

    pool = [_corpus_doc(f"p{i}", [25 + i, 30, 40, 22]) for i in range(6)]
    a = dumps_record(make_concatenated(pool, 3, seed=7)).encode("utf-8")
    b = dumps_record(make_concatenated(pool, 3, seed=7)).encode("utf-8")
    assert a == b
    assert a != dumps_record(make_concatenated(pool, 3, seed=8)).encode("utf-8")


@pytest.mark.acceptance("end-to-end segment + evaluate on the mini corpus")
def test_end_to_end(tmp_path):
    corpus = str(DATA / "mini_corpus.jsonl")
    mock = str(DATA / "mock_provider.json")
    t0 = time.perf_counter()
    outputs = []
    for run in ("a", "b"):
        d = tmp_path / run
        d.mkdir()
        assert main(["segment", "--segmenter", "llm", "--provider", mock, "--trace",
                     corpus, str(d / "llm.jsonl")]) == 0
        assert main(["segment", "--segmenter", "split5", corpus, str(d / "split5.jsonl")]) == 0
        assert main(["evaluate", f"llm={d / 'llm.jsonl'}", f"split5={d / 'split5.jsonl'}",
                     "--ref", corpus, "--out-dir", str(d / "report")]) == 0
        outputs.append({
            p.relative_to(d).as_posix(): p.read_bytes() for p in sorted(d.rglob("*")) if p.is_file()
        })
    elapsed = time.perf_counter() - t0
    assert elapsed < 30, f"took {elapsed:.1f}s"
    assert outputs[0] == outputs[1]

    files = outputs[0]
    assert {"llm.jsonl", "split5.jsonl", "report/table.txt", "report/summary.csv",
            "report/documents.csv"} <= set(files)
    records = [json.loads(line) for line in files["llm.jsonl"].decode().splitlines()]
    assert len(records) == 20 and all("error" not in r for r in records)

    table = files["report/table.txt"].decode()
    header = files["report/summary.csv"].decode().splitlines()[0].split(",")
    datasets = sorted({c.split(":")[0] for c in header[1:]})
    for ds in datasets:
        for metric in ("B", "BP", "BR"):
            assert f"{ds}:{metric}" in header
    rows = [line.split("|")[0].strip() for line in table.splitlines()[4:]]
    assert rows == ["llm", "split5"]
