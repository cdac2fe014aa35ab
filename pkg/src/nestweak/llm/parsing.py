"""Turning raw LLM answers into located entity predictions.

The answer is expected as a JSON object ``{entity: type}`` inside a
triple-backtick fence. Each entity string is located in the source text by
exact occurrence; strings that do not occur are discarded. Anything that
cannot be parsed yields an empty prediction with the failure logged.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from typing import Iterable, Optional

from ..corpus import Mention
from .prompts import NEREL_TYPES

_THINK_RE = re.compile(r"<think>.*?(</think>|$)", re.S)
_FENCE_RE = re.compile(r"```(.*?)```", re.S)
_LANG_TAG_RE = re.compile(r"^\s*[A-Za-z][\w+-]*\s*(?=[\[{])")
_TRAILING_COMMA_RE = re.compile(r",\s*([}\]])")

OCCURRENCE_POLICIES = ("first", "all")


@dataclass(frozen=True)
class Discard:
    reason: str
    surface: object
    entity_type: object = None


@dataclass
class ParsedPrediction:
    entities: list[Mention] = field(default_factory=list)
    discards: list[Discard] = field(default_factory=list)
    out_of_inventory: list[Mention] = field(default_factory=list)
    failure: Optional[str] = None

    @property
    def parse_failed(self) -> bool:
        return self.failure is not None


def extract_payload(raw: str) -> str:
    """Body of the last fenced block with formatting artifacts removed.

    Raises ``ValueError`` when there is no fenced block.
    """
    text = _THINK_RE.sub("", raw)
    blocks = _FENCE_RE.findall(text)
    if not blocks:
        raise ValueError("no fenced block")
    body = blocks[-1].strip()
    body = _LANG_TAG_RE.sub("", body, count=1).strip()
    return _TRAILING_COMMA_RE.sub(r"\1", body)


def _pairs(obj) -> list[tuple]:
    if isinstance(obj, list) and obj and all(isinstance(x, list) and _is_object(x) for x in obj):
        return [p for item in obj for p in item]
    if _is_object(obj):
        return list(obj)
    raise ValueError(f"expected a JSON object, got {type(obj).__name__}")


def _is_object(x) -> bool:
    # object_pairs_hook turns objects into lists of 2-tuples
    return isinstance(x, list) and all(isinstance(p, tuple) and len(p) == 2 for p in x)


def occurrences(text: str, needle: str, policy: str = "first") -> list[int]:
    if policy == "first":
        pos = text.find(needle)
        return [pos] if pos >= 0 else []
    found = []
    pos = text.find(needle)
    while pos >= 0:
        found.append(pos)
        pos = text.find(needle, pos + 1)
    return found


def parse_response(
    raw: str,
    source_text: str,
    occurrence: str = "first",
    inventory: Iterable[str] = NEREL_TYPES,
) -> ParsedPrediction:
    if occurrence not in OCCURRENCE_POLICIES:
        raise ValueError(f"occurrence must be one of {OCCURRENCE_POLICIES}")
    result = ParsedPrediction()
    try:
        payload = extract_payload(raw)
        pairs = _pairs(json.loads(payload, object_pairs_hook=lambda kv: list(kv)))
    except (ValueError, TypeError) as exc:
        result.failure = str(exc) or type(exc).__name__
        return result

    known = set(inventory)
    seen = set()
    for surface, etype in pairs:
        if not isinstance(surface, str) or not isinstance(etype, str):
            result.discards.append(Discard("invalid_value", surface, etype))
            continue
        surface, etype = surface.strip(), etype.strip()
        if not surface or not etype:
            result.discards.append(Discard("empty", surface, etype))
            continue
        positions = occurrences(source_text, surface, occurrence)
        if not positions:
            result.discards.append(Discard("not_in_source", surface, etype))
            continue
        for pos in positions:
            m = Mention(pos, pos + len(surface), etype, surface)
            if m.key in seen:
                continue
            seen.add(m.key)
            result.entities.append(m)
            if etype not in known:
                result.out_of_inventory.append(m)
    result.entities.sort()
    return result
