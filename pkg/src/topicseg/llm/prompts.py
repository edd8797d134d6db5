"""Prompt assembly for boundary-list and single-boundary requests."""
from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Sequence

from ..exceptions import ConfigError, PromptTooLarge
from ..text import estimate_tokens
from .gateway import ChatRequest

SYSTEM_PROMPT = (
    "You are a careful reader with a sharp ear for where the subject of a text shifts. "
    "You follow instructions exactly and answer only in the requested format. "
    "You never rewrite or summarise the text. You never repeat an index, never give an index "
    "beyond the last marker in the text, and never fall into a fixed stride of indices."
)

SEGMENT_INSTRUCTION = (
    "The document below has numbered markers between its sentences: marker [i] sits between "
    "sentence i and sentence i+1. Divide the document into parts that each keep to a single "
    "topic. Answer with the marker numbers where a new part begins, as comma-separated "
    "integers such as '2, 6, 9', and nothing else. Answer 'none' if the whole document keeps "
    "to one topic."
)

RECURSIVE_INSTRUCTION = (
    "The document below has numbered markers between its sentences: marker [i] sits between "
    "sentence i and sentence i+1. Pick the one marker that best divides the document into two "
    "parts with distinct topics. Answer with that single integer and nothing else."
)

EXAMPLES_NOTE = "Worked examples follow."
SEGMENT_CUE = "Segments:"
RECURSIVE_CUE = "Segment:"

# labels, blank lines and rounding on top of the window budget
PROMPT_SLACK = 64


@dataclass(frozen=True)
class FewShotExample:
    text: str  # already enumerated
    answer: str


def load_examples(source: str | Path | None = None, kind: str = "segment") -> tuple[FewShotExample, ...]:
    """Read ``[{"text": ..., "answer": ...}, ...]`` from a file, or the bundled set."""
    try:
        if source is None:
            name = {"segment": "segment_examples.json", "recursive": "recursive_examples.json"}[kind]
            raw = resources.files("topicseg.data").joinpath(name).read_text(encoding="utf-8")
        else:
            raw = Path(source).read_text(encoding="utf-8")
        data = json.loads(raw)
    except (OSError, ValueError, KeyError) as exc:
        raise ConfigError(f"cannot load few-shot examples from {source or kind}: {exc}") from exc
    if not isinstance(data, list):
        raise ConfigError("few-shot file must hold a JSON list")
    out = []
    for i, item in enumerate(data):
        if not isinstance(item, dict) or not {"text", "answer"} <= item.keys():
            raise ConfigError(f"few-shot example {i} needs 'text' and 'answer'")
        out.append(FewShotExample(str(item["text"]), str(item["answer"])))
    return tuple(out)


def _body(instruction: str, examples: Sequence[FewShotExample], target: str, cue: str) -> str:
    parts = [instruction + (" " + EXAMPLES_NOTE if examples else "")]
    for ex in examples:
        parts.append(f"Text:\n\n{ex.text}\n\n{cue}\n\n{ex.answer}")
    parts.append(f"Text:\n\n{target}\n\n{cue}")
    return "\n\n".join(parts)


def scaffold_tokens(system: str, instruction: str, examples: Sequence[FewShotExample], cue: str) -> int:
    """Prompt cost excluding the target text."""
    return estimate_tokens(system) + estimate_tokens(_body(instruction, examples, "", cue))


def _request(system: str, body: str, budget: int | None, max_output_tokens: int) -> ChatRequest:
    if budget is not None:
        cost = estimate_tokens(system) + estimate_tokens(body)
        if cost > budget + PROMPT_SLACK:
            raise PromptTooLarge(f"prompt needs ~{cost} tokens; budget is {budget}")
    return ChatRequest(
        system=system,
        messages=(("user", body),),
        deterministic=True,
        max_output_tokens=max_output_tokens,
    )


def segment_request(
    enumerated: str,
    examples: Sequence[FewShotExample] = (),
    system: str = SYSTEM_PROMPT,
    budget: int | None = None,
    max_output_tokens: int = 256,
) -> ChatRequest:
    if not enumerated.strip():
        raise ValueError("nothing to segment")
    body = _body(SEGMENT_INSTRUCTION, examples, enumerated, SEGMENT_CUE)
    return _request(system, body, budget, max_output_tokens)


def recursive_request(
    enumerated: str,
    examples: Sequence[FewShotExample] = (),
    system: str = SYSTEM_PROMPT,
    budget: int | None = None,
    max_output_tokens: int = 16,
) -> ChatRequest:
    if " [1] " not in enumerated:
        raise ValueError("a single sentence cannot be split")
    body = _body(RECURSIVE_INSTRUCTION, examples, enumerated, RECURSIVE_CUE)
    return _request(system, body, budget, max_output_tokens)
