"""Regenerate the bundled mini-corpus (src/topicseg/data/mini_corpus.jsonl).

Each document stitches 4 to 6 topical passages of generated sentences, so the
reference boundaries are known by construction. Output is deterministic.
"""
from __future__ import annotations

import random
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from topicseg.corpus import CorpusDocument, write_jsonl  # noqa: E402
from topicseg.text import Segmentation, split_sentences  # noqa: E402

TOPICS = {
    "astronomy": (
        ["the telescope", "a distant galaxy", "the comet", "the observatory", "a red giant star", "the lunar crater"],
        ["was observed by", "drifted slowly past", "was catalogued near", "outshone", "was photographed beside"],
        ["the night sky", "a bright nebula", "the orbiting satellite", "the southern horizon", "a cluster of stars"],
    ),
    "cooking": (
        ["the baker", "a fresh loaf", "the chef", "the simmering soup", "a bowl of dough", "the spice rack"],
        ["was seasoned with", "rested next to", "was stirred into", "smelled of", "was served with"],
        ["roasted garlic", "a pinch of salt", "warm butter", "the cast iron pan", "chopped herbs"],
    ),
    "sailing": (
        ["the sailor", "a wooden ketch", "the harbour master", "the mainsail", "a sturdy anchor", "the crew"],
        ["was steered toward", "was lashed to", "tacked against", "was moored beside", "rode out"],
        ["the rocky coast", "a strong westerly wind", "the lighthouse", "the open sea", "a quiet cove"],
    ),
    "gardening": (
        ["the gardener", "a row of tomatoes", "the compost heap", "the rose bush", "a young apple tree", "the hedge"],
        ["was planted near", "was pruned beside", "grew along", "was watered after", "was mulched with"],
        ["the greenhouse", "a bed of tulips", "the garden shed", "rich dark soil", "the vegetable patch"],
    ),
    "railways": (
        ["the locomotive", "a freight train", "the signal box", "the station master", "a steam engine", "the platform"],
        ["rumbled past", "was coupled to", "waited beside", "was switched onto", "was inspected near"],
        ["the branch line", "a narrow viaduct", "the goods yard", "the mountain tunnel", "the timetable board"],
    ),
    "music": (
        ["the violinist", "a brass quartet", "the conductor", "the grand piano", "a choir of children", "the drummer"],
        ["rehearsed with", "was tuned before", "played alongside", "was accompanied by", "performed for"],
        ["the concert hall", "a slow sonata", "the eager audience", "the opening overture", "a folk melody"],
    ),
    "geology": (
        ["the geologist", "a layer of basalt", "the glacier", "the limestone cliff", "a volcanic vent", "the fossil bed"],
        ["was eroded by", "was mapped beside", "lay beneath", "was sampled near", "was exposed by"],
        ["the river valley", "a granite ridge", "the ancient seabed", "the fault line", "shifting sediment"],
    ),
    "medicine": (
        ["the nurse", "a young doctor", "the surgeon", "the pharmacist", "a patient", "the ward sister"],
        ["was examined by", "consulted with", "was treated beside", "prepared a dose for", "was monitored by"],
        ["the clinic", "a recovering patient", "the emergency ward", "the laboratory", "the night shift"],
    ),
}
ADVERBS = ["Later", "Meanwhile", "Early that morning", "By noon", "Soon afterwards", "In the evening", "Once again"]


def sentence(rng: random.Random, topic: str) -> str:
    subj, verb, obj = TOPICS[topic]
    s = f"{rng.choice(subj)} {rng.choice(verb)} {rng.choice(obj)}"
    if rng.random() < 0.5:
        s = f"{rng.choice(ADVERBS)}, {s}"
    if rng.random() < 0.4:
        s += f" and {rng.choice(verb)} {rng.choice(obj)}"
    return s[0].upper() + s[1:] + "."


def passage(rng: random.Random, topic: str) -> list[str]:
    out: list[str] = []
    while len(out) < 6 or sum(len(s.split()) for s in out) < 60:
        out.append(sentence(rng, topic))
    return out


def make_document(i: int, rng: random.Random) -> CorpusDocument:
    topics = rng.sample(sorted(TOPICS), rng.randint(4, 6))
    passages = [passage(rng, t) for t in topics]
    text = "\n".join(" ".join(p) for p in passages)
    bounds, total = [], 0
    for p in passages[:-1]:
        total += len(p)
        bounds.append(total)
    count = split_sentences(text).count
    assert count == total + len(passages[-1]), (i, count)
    return CorpusDocument(
        id=f"mini-{i:02d}",
        source="synthetic" if i % 2 else "conc",
        text=text,
        reference=Segmentation.from_boundaries(count, bounds),
        meta={"topics": topics},
    )


def main(out: str | None = None) -> None:
    rng = random.Random(2024)
    docs = [make_document(i, rng) for i in range(20)]
    target = Path(out) if out else Path(__file__).resolve().parents[1] / "src/topicseg/data/mini_corpus.jsonl"
    write_jsonl(target, docs)
    print(f"wrote {len(docs)} documents to {target}")


if __name__ == "__main__":
    main(*sys.argv[1:])
