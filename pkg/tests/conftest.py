from __future__ import annotations

import random

import pytest

from topicseg.llm.gateway import MockProvider, MockRule

_ACCEPTANCE: list[tuple[str, str]] = []


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.failed):
        return
    name = dict(report.user_properties).get("acceptance")
    if name is not None:
        _ACCEPTANCE.append((name, "PASS" if report.passed else "FAIL"))


@pytest.hookimpl(tryfirst=True)
def pytest_runtest_setup(item):
    marker = item.get_closest_marker("acceptance")
    if marker is not None:
        item.user_properties.append(("acceptance", marker.args[0]))


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name, outcome in _ACCEPTANCE:
        terminalreporter.write_line(f"{outcome}  {name}")


def topical_sentence(rng: random.Random, topic: int, words: int | None = None) -> str:
    vocab = [f"{chr(97 + topic)}{w}" for w in ("alpha", "beta", "gamma", "delta", "omega", "sigma")]
    n = words if words is not None else rng.randint(6, 14)
    body = " ".join(rng.choice(vocab) for _ in range(n))
    return body[0].upper() + body[1:] + "."


def make_text(rng: random.Random, n_sentences: int, words: int | None = None) -> str:
    """Plain prose with exactly ``n_sentences`` sentences."""
    return " ".join(topical_sentence(rng, rng.randrange(5), words) for _ in range(n_sentences))


@pytest.fixture
def median_provider():
    return MockProvider([MockRule("Pick the one marker", "{median}"), MockRule("*", "none")])
