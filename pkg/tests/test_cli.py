import json
from importlib import resources

import pytest

from topicseg.cli import load_config, main
from topicseg.corpus import read_jsonl
from topicseg.exceptions import ConfigError

DATA = resources.files("topicseg.data")
CORPUS = str(DATA / "mini_corpus.jsonl")
MOCK = str(DATA / "mock_provider.json")


def records(path):
    return [json.loads(line) for line in open(path, encoding="utf-8")]


def test_segment_split5(tmp_path):
    out = tmp_path / "out.jsonl"
    assert main(["segment", "--segmenter", "split5", CORPUS, str(out)]) == 0
    for rec in records(out):
        assert rec["boundaries"] == list(range(5, rec["num_sentences"], 5))


def test_segment_llm_deterministic_and_jobs(tmp_path):
    a, b = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
    assert main(["segment", "--provider", MOCK, CORPUS, str(a)]) == 0
    assert main(["segment", "--provider", MOCK, "--jobs", "4", CORPUS, str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_segment_trace_and_trough_plot(tmp_path):
    out = tmp_path / "t.jsonl"
    assert main(["segment", "--segmenter", "trough", "--trace", "--embeddings", "hashing:256", CORPUS, str(out)]) == 0
    rec = records(out)[0]
    assert len(rec["trace"]["series"]) == rec["num_sentences"] - 1
    svg = tmp_path / "s.svg"
    csv_path = tmp_path / "s.csv"
    assert main(["plot", "series", str(out), str(svg), "--doc-id", rec["doc_id"], "--csv", str(csv_path)]) == 0
    text = svg.read_text()
    points = text.split('class="series"')[1].split('points="')[1].split('"')[0].split()
    assert len(points) == rec["num_sentences"] - 1
    assert 'class="threshold"' in text
    assert len(csv_path.read_text().splitlines()) == rec["num_sentences"]


def test_segment_graph(tmp_path):
    out = tmp_path / "g.jsonl"
    assert main(["segment", "--segmenter", "graph", "--seed", "3", CORPUS, str(out)]) == 0
    assert len(records(out)) == 20


def test_missing_credentials_exit_2(tmp_path, monkeypatch):
    monkeypatch.delenv("OPENAI_API_KEY", raising=False)
    out = tmp_path / "o.jsonl"
    assert main(["segment", "--provider", "http", CORPUS, str(out)]) == 2
    assert not out.exists()


def test_provider_failure_exit_3(tmp_path):
    mock = tmp_path / "m.json"
    mock.write_text(json.dumps([{"match": "*", "error": "transport"}]))
    out = tmp_path / "o.jsonl"
    assert main(["segment", "--provider", str(mock), CORPUS, str(out)]) == 3
    recs = records(out)
    assert len(recs) == 20 and all(r["error"]["type"] == "TransportError" for r in recs)


def test_refuses_to_overwrite_input(tmp_path):
    src = tmp_path / "in.jsonl"
    src.write_bytes(open(CORPUS, "rb").read())
    before = src.read_bytes()
    assert main(["segment", "--segmenter", "split5", str(src), str(src)]) == 2
    assert src.read_bytes() == before


def test_config_file(tmp_path):
    cfg = tmp_path / "run.ini"
    cfg.write_text("[segmenter]\nk = 4\n[run]\njobs = 2\n")
    assert load_config(str(cfg))["segmenter"]["k"] == 4
    out = tmp_path / "o.jsonl"
    assert main(["segment", "--segmenter", "split5", "--config", str(cfg), CORPUS, str(out)]) == 0
    assert records(out)[0]["boundaries"][:2] == [4, 8]
    cfg.write_text("[segmenter]\nbogus = 1\n")
    with pytest.raises(ConfigError):
        load_config(str(cfg))
    assert main(["segment", "--config", str(cfg), CORPUS, str(out)]) == 2
    cfg.write_text("[nosuch]\nk = 1\n")
    assert main(["segment", "--config", str(cfg), CORPUS, str(out)]) == 2


def test_evaluate_identity(tmp_path):
    hyp = tmp_path / "hyp.jsonl"
    hyp.write_text("".join(
        json.dumps({"doc_id": d.id, "num_sentences": d.reference.num_sentences,
                    "boundaries": list(d.reference.boundaries)}) + "\n"
        for d in read_jsonl(CORPUS)
    ))
    rep = tmp_path / "rep"
    assert main(["evaluate", f"oracle={hyp}", "--ref", CORPUS, "--out-dir", str(rep)]) == 0
    header, values = [line.split(",")[1:] for line in (rep / "summary.csv").read_text().splitlines()]
    for col, val in zip(header, values):
        metric = col.split(":")[1]
        assert float(val) == (0.0 if metric in ("Pk", "WD") else 1.0)
    assert "n=2" in (rep / "table.txt").read_text()


def test_evaluate_id_mismatch(tmp_path):
    hyp = tmp_path / "h.jsonl"
    hyp.write_text(json.dumps({"doc_id": "zzz", "num_sentences": 3, "boundaries": [1]}) + "\n")
    assert main(["evaluate", str(hyp), "--ref", CORPUS, "--out-dir", str(tmp_path / "r")]) == 2


def test_evaluate_sentence_mismatch(tmp_path):
    hyp = tmp_path / "h.jsonl"
    hyp.write_text("".join(
        json.dumps({"doc_id": json.loads(l)["id"], "num_sentences": 2, "boundaries": []}) + "\n"
        for l in open(CORPUS)
    ))
    assert main(["evaluate", str(hyp), "--ref", CORPUS, "--out-dir", str(tmp_path / "r")]) == 2


def test_corpus_commands(tmp_path):
    art = tmp_path / "town.txt"
    art.write_text("== A ==\nOne here. Two here.\n== B ==\nThree here.\n")
    ing = tmp_path / "ing.jsonl"
    assert main(["corpus", "ingest", "--format", "wiki", str(art), "-o", str(ing)]) == 0
    rec = records(ing)[0]
    assert rec["boundaries"] == [2] and "==" not in rec["text"]

    kept, report = tmp_path / "kept.jsonl", tmp_path / "report.csv"
    assert main(["corpus", "filter", "--min-segments", "4", CORPUS, str(kept), "--report", str(report)]) == 0
    lines = report.read_text().splitlines()
    assert lines[0] == "id,kept,reasons" and len(lines) == 21
    assert main(["corpus", "filter", "--min-segments", "6", str(ing), str(kept)]) == 0
    assert kept.read_text() == ""

    c1, c2 = tmp_path / "c1.jsonl", tmp_path / "c2.jsonl"
    for c in (c1, c2):
        assert main(["corpus", "concat", "--k", "3", "--seed", "7", "--count", "2", CORPUS, str(c)]) == 0
    assert c1.read_bytes() == c2.read_bytes()
    assert len(records(c1)) == 2
    assert main(["corpus", "concat", "--k", "50", CORPUS, str(c1)]) == 2


def test_plot_report_and_errors(tmp_path):
    summary = tmp_path / "summary.csv"
    summary.write_text("segmenter,wiki:B,wiki:BP,conc:B\nllm,0.5,0.6,0.7\nsplit5,0.2,0.3,0.1\n")
    svg = tmp_path / "b.svg"
    assert main(["plot", "report", str(summary), str(svg)]) == 0
    assert svg.read_text().count('class="bar"') == 4
    empty = tmp_path / "e.json"
    empty.write_text("[]")
    assert main(["plot", "series", str(empty), str(tmp_path / "x.svg")]) == 2
    series = tmp_path / "s.json"
    series.write_text(json.dumps({"values": [0.5, 0.1, 0.7], "threshold": 0.3, "boundaries": [2]}))
    assert main(["plot", "series", str(series), str(svg)]) == 0
    assert 'class="boundary"' in svg.read_text()


def test_plot_series_from_text(tmp_path):
    a, b = tmp_path / "a.svg", tmp_path / "b.svg"
    for svg in (a, b):
        assert main(["plot", "series", "--text", "--doc-id", "mini-00", "--threshold", "0.3", CORPUS, str(svg)]) == 0
    assert a.read_bytes() == b.read_bytes()
    assert main(["plot", "series", "--text", "--doc-id", "nope", CORPUS, str(a)]) == 2
