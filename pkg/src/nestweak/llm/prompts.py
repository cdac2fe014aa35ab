"""Prompt assets, few-shot example selection and prompt assembly."""

from __future__ import annotations

import json
import random
import re
from collections import Counter
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Optional, Union

from ..corpus import Corpus, Mention, container_counts
from ..errors import EmptyTrain, MissingAsset
from ..lemmas import EMPTY, LemmaDictionary, canonical_form, lemmatize_tokens
from ..text import token_strings

NEREL_TYPES = (
    "AGE", "AWARD", "CITY", "COUNTRY", "CRIME", "DATE", "DISEASE", "DISTRICT", "EVENT",
    "FACILITY", "FAMILY", "IDEOLOGY", "LANGUAGE", "LAW", "LOCATION", "MONEY", "NATIONALITY",
    "NUMBER", "ORDINAL", "ORGANIZATION", "PENALTY", "PERCENT", "PERSON", "PRODUCT",
    "PROFESSION", "RELIGION", "STATE_OR_PROVINCE", "TIME", "WORK_OF_ART",
)
SELECTIONS = ("random", "mfe", "mfe_entwise", "mfe_entwise_sent")
SHOTS = (0, 1, 5)

_PATTERN_HEAD_RE = re.compile(r"^For class (\S+) most common nested entity classes are:", re.M)


def read_asset(name: str) -> str:
    try:
        return resources.files("nestweak.llm").joinpath("assets", name).read_text(encoding="utf-8")
    except (FileNotFoundError, OSError) as exc:
        raise MissingAsset(f"prompt asset {name!r} not found") from exc


def _read(path: Union[str, Path, None], default: str) -> str:
    if path is None:
        return read_asset(default)
    try:
        return Path(path).read_text(encoding="utf-8")
    except FileNotFoundError as exc:
        raise MissingAsset(f"prompt asset {path} not found") from exc


def load_template(path: Union[str, Path, None] = None) -> str:
    return _read(path, "base_prompt.txt").rstrip("\n")


def load_definitions(path: Union[str, Path, None] = None) -> dict[str, str]:
    out = {}
    for line in _read(path, "definitions.tsv").splitlines():
        if not line.strip() or line.startswith("#"):
            continue
        etype, text = line.split("\t", 1)
        out[etype] = text
    return out


def parse_nesting_patterns(text: str) -> dict[str, str]:
    heads = list(_PATTERN_HEAD_RE.finditer(text))
    out = {}
    for i, m in enumerate(heads):
        end = heads[i + 1].start() if i + 1 < len(heads) else len(text)
        out[m.group(1)] = text[m.start():end].strip()
    return out


def load_nesting_patterns(path: Union[str, Path, None] = None) -> dict[str, str]:
    return parse_nesting_patterns(_read(path, "nesting_patterns.txt"))


def format_answer(entities) -> str:
    return "```" + json.dumps(dict(entities), ensure_ascii=False) + "```"


def derive_nesting_patterns(nested: Corpus, top_classes: int = 5) -> dict[str, str]:
    """Per-type nesting pattern texts computed from a nested corpus.

    For each outermost type: the most common classes found inside its
    mentions and the outermost mention with the most nested entities as
    the worked example.
    """
    inner_types: dict[str, Counter] = {}
    best: dict[str, tuple[int, Mention, list[Mention]]] = {}
    for doc in nested:
        depth = container_counts(doc.mentions)
        for outer in doc.mentions:
            if depth[outer.span]:
                continue
            inside = [m for m in doc.mentions if outer.strictly_contains(m)]
            if not inside:
                continue
            inner_types.setdefault(outer.entity_type, Counter()).update(m.entity_type for m in inside)
            if outer.entity_type not in best or len(inside) > best[outer.entity_type][0]:
                best[outer.entity_type] = (len(inside), outer, inside)
    patterns = {}
    for etype, counts in sorted(inner_types.items()):
        classes = [t for t, _ in sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))[:top_classes]]
        _, outer, inside = best[etype]
        nested_list = ", ".join(json.dumps({m.surface: m.entity_type}, ensure_ascii=False) for m in inside)
        patterns[etype] = (
            f"For class {etype} most common nested entity classes are: {', '.join(classes)}\n\n"
            f"Here are some examples of the {etype} class as outermost entity and its nested entities:\n"
            f"Outermost entity: ```{outer.surface}```, nested are: ```[{nested_list}]```"
        )
    return patterns


def format_patterns(patterns: dict[str, str]) -> str:
    return "\n\n".join(patterns[t] for t in sorted(patterns)) + "\n"


@dataclass
class PromptSpec:
    template: str = ""
    shots: int = 0
    selection: str = "mfe"
    definitions: Optional[dict[str, str]] = None
    nesting_patterns: Optional[dict[str, str]] = None
    seed: int = 0
    entwise_top: int = 3

    def __post_init__(self):
        if self.shots not in SHOTS:
            raise ValueError(f"shots must be one of {SHOTS}")
        if self.selection not in SELECTIONS:
            raise ValueError(f"selection must be one of {SELECTIONS}")
        if not self.template:
            self.template = load_template()


@dataclass
class Example:
    text: str
    entities: list[tuple[str, str]]


@dataclass
class ExampleBlock:
    examples: list[Example] = field(default_factory=list)
    per_type: dict[str, list[str]] = field(default_factory=dict)

    def __bool__(self):
        return bool(self.examples or self.per_type)

    def render(self) -> str:
        parts = []
        if self.per_type:
            lines = ["Most frequent entities of each class:"]
            lines.extend(f"{t}: {', '.join(s)}" for t, s in sorted(self.per_type.items()))
            parts.append("\n".join(lines))
        if self.examples:
            lines = ["Examples:"]
            for ex in self.examples:
                lines.append(f"Text: {ex.text}")
                lines.append(f"Answer: {format_answer(ex.entities)}")
            parts.append("\n".join(lines))
        return "\n\n".join(parts)


@dataclass
class _Sentence:
    text: str
    mentions: list[Mention]


def _sentences(train: Corpus) -> list[_Sentence]:
    out = []
    for doc in train:
        for s, e in doc.sentence_spans(heuristic=True):
            inside = [m for m in doc.mentions if m.start >= s and m.end <= e]
            out.append(_Sentence(doc.text[s:e], inside))
    return out


def _example(sent: _Sentence) -> Example:
    return Example(sent.text, [(m.surface, m.entity_type) for m in sent.mentions])


def _ranked(counts: Counter) -> list:
    return [k for k, _ in sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))]


def _is_dictionary_form(surface: str, lemmas: LemmaDictionary) -> bool:
    return lemmatize_tokens(surface, lemmas) == [t.casefold() for t in token_strings(surface)]


def _groups(train: Corpus, lemmas: LemmaDictionary, pooled: bool):
    """Per type, rows ``(frequency, representative, member surfaces)`` ranked by frequency."""
    per_type: dict[str, dict[str, Counter]] = {}
    for doc in train:
        for m in doc.mentions:
            key = m.surface
            if pooled:
                key = canonical_form(m.surface, lemmas) or m.surface
            per_type.setdefault(m.entity_type, {}).setdefault(key, Counter())[m.surface] += 1
    out = {}
    for etype, groups in per_type.items():
        rows = []
        for key, surfaces in groups.items():
            ranked = _ranked(surfaces)
            if pooled:
                base = [s for s in ranked if _is_dictionary_form(s, lemmas)]
                rep = base[0] if base else ranked[0]
            else:
                rep = ranked[0]
            rows.append((sum(surfaces.values()), rep, set(surfaces)))
        rows.sort(key=lambda r: (-r[0], r[1]))
        out[etype] = rows
    return out


def select_examples(train: Corpus, spec: PromptSpec, lemmas: LemmaDictionary = EMPTY) -> ExampleBlock:
    if spec.shots == 0:
        return ExampleBlock()
    sentences = _sentences(train)
    if not sentences:
        raise EmptyTrain("training corpus has no sentences to draw examples from")

    if spec.selection == "random":
        rng = random.Random(spec.seed)
        picks = rng.sample(range(len(sentences)), min(spec.shots, len(sentences)))
        return ExampleBlock([_example(sentences[i]) for i in picks])

    chosen: list[int] = []

    def first_sentence(pred):
        for i, sent in enumerate(sentences):
            if i not in chosen and any(pred(m) for m in sent.mentions):
                return i
        return None

    if spec.selection == "mfe":
        freq = Counter(m.surface for d in train for m in d.mentions)
        for surface in _ranked(freq):
            if len(chosen) >= spec.shots:
                break
            i = first_sentence(lambda m: m.surface == surface)
            if i is not None:
                chosen.append(i)
        return ExampleBlock([_example(sentences[i]) for i in chosen])

    pooled = spec.selection == "mfe_entwise_sent"
    groups = _groups(train, lemmas, pooled)
    per_type = {t: [rep for _, rep, _ in rows[:spec.entwise_top]] for t, rows in groups.items()}
    type_order = sorted(groups, key=lambda t: (-sum(r[0] for r in groups[t]), t))
    rank = 0
    while len(chosen) < spec.shots and any(rank < len(groups[t]) for t in type_order):
        for etype in type_order:
            if len(chosen) >= spec.shots:
                break
            if rank >= len(groups[etype]):
                continue
            members = groups[etype][rank][2]
            i = first_sentence(lambda m: m.entity_type == etype and m.surface in members)
            if i is not None:
                chosen.append(i)
        rank += 1
    return ExampleBlock([_example(sentences[i]) for i in chosen], per_type)


def _definitions_text(defs: dict[str, str]) -> str:
    return "\n".join(f"{t}: {defs[t]}" for t in sorted(defs))


def build_prompt(text: str, spec: PromptSpec, examples: Optional[ExampleBlock] = None) -> list[dict]:
    """Chat messages for extracting all (outer and inner) entities from ``text``."""
    parts = [spec.template]
    if spec.definitions:
        parts.append(_definitions_text(spec.definitions))
    if spec.nesting_patterns:
        parts.append(format_patterns(spec.nesting_patterns).rstrip("\n"))
    if examples:
        parts.append(examples.render())
    parts.append(f"Text: {text}")
    return [{"role": "user", "content": "\n\n".join(parts)}]


def build_hybrid_prompt(surface: str, entity_type: str, spec: PromptSpec, patterns: str = "type_specific") -> list[dict]:
    """Chat messages asking for the entities nested inside one outer entity.

    ``patterns="type_specific"`` includes the nesting pattern of the outer
    type only; ``"full"`` includes the patterns of every type.
    """
    if spec.nesting_patterns is None:
        raise MissingAsset("hybrid prompts need nesting patterns")
    parts = [spec.template]
    if spec.definitions:
        parts.append(_definitions_text(spec.definitions))
    if patterns == "full":
        parts.append(format_patterns(spec.nesting_patterns).rstrip("\n"))
    elif patterns == "type_specific":
        if entity_type in spec.nesting_patterns:
            parts.append(spec.nesting_patterns[entity_type])
    else:
        raise ValueError(f"unknown pattern mode {patterns!r}")
    parts.append(f"Outermost entity ({entity_type}): ```{surface}```, nested are:")
    return [{"role": "user", "content": "\n\n".join(parts)}]
