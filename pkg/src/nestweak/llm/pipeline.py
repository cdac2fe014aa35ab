"""Pure-LLM and hybrid (outer model + LLM per span) extraction runs."""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Optional

from ..corpus import Corpus, Document, Mention
from ..errors import EndpointError
from ..lemmas import EMPTY, LemmaDictionary, canonical_form
from ..text import split_sentences, tokenize
from .client import ChatRequest, Endpoint, RetryPolicy, TranscriptStore, complete_with_retries
from .parsing import ParsedPrediction, parse_response
from .prompts import NEREL_TYPES, ExampleBlock, PromptSpec, build_hybrid_prompt, build_prompt

log = logging.getLogger(__name__)


@dataclass
class RunOptions:
    model: str = "default"
    unit: str = "sentence"  # sentence | document
    occurrence: str = "first"
    workers: int = 4
    temperature: float = 0.0
    repetition_penalty: float = 1.05
    top_p: float = 1.0
    max_tokens: int = 5000
    retry: RetryPolicy = field(default_factory=RetryPolicy)
    transcript: Optional[TranscriptStore] = None
    inventory: tuple[str, ...] = NEREL_TYPES

    def request(self, messages) -> ChatRequest:
        return ChatRequest(
            self.model, tuple(messages), self.temperature, self.repetition_penalty, self.top_p, self.max_tokens
        )


@dataclass
class _Job:
    doc_id: str
    offset: int
    text: str
    request: ChatRequest
    outer: Optional[Mention] = None


def _run_jobs(jobs: list[_Job], endpoint: Endpoint, opts: RunOptions) -> list[Optional[str]]:
    def call(job: _Job) -> Optional[str]:
        try:
            return complete_with_retries(endpoint, job.request, opts.retry, opts.transcript).text
        except EndpointError as exc:
            log.error("%s: request failed: %s", job.doc_id, exc)
            return None

    if opts.workers <= 1:
        return [call(j) for j in jobs]
    with ThreadPoolExecutor(max_workers=opts.workers) as pool:
        return list(pool.map(call, jobs))


@dataclass
class _Tally:
    requests: int = 0
    failed: dict = field(default_factory=dict)
    parse_failures: int = 0
    discards: int = 0
    out_of_inventory: int = 0
    lemma_matches: int = 0

    def note(self, job: _Job, parsed: Optional[ParsedPrediction]) -> None:
        self.requests += 1
        if parsed is None:
            self.failed[job.doc_id] = self.failed.get(job.doc_id, 0) + 1
            return
        self.parse_failures += parsed.parse_failed
        self.discards += len(parsed.discards)
        self.out_of_inventory += len(parsed.out_of_inventory)

    def to_dict(self) -> dict:
        return {
            "requests": self.requests,
            "failed_requests_per_doc": dict(sorted(self.failed.items())),
            "parse_failures": self.parse_failures,
            "discarded_entities": self.discards,
            "out_of_inventory": self.out_of_inventory,
            "lemma_matches": self.lemma_matches,
        }


def _units(doc: Document, unit: str) -> list[tuple[int, int]]:
    if unit == "document":
        return [(0, len(doc.text))] if doc.text else []
    if unit == "sentence":
        return list(doc.sentences) if doc.sentences is not None else split_sentences(doc.text)
    raise ValueError(f"unit must be 'sentence' or 'document', not {unit!r}")


def run_pure(
    test: Corpus,
    spec: PromptSpec,
    endpoint: Endpoint,
    examples: Optional[ExampleBlock] = None,
    options: Optional[RunOptions] = None,
) -> Corpus:
    """One request per sentence (or document); parsed entities become the prediction corpus."""
    opts = options or RunOptions()
    jobs = []
    for doc in sorted(test, key=lambda d: d.doc_id):
        for s, e in _units(doc, opts.unit):
            text = doc.text[s:e]
            jobs.append(_Job(doc.doc_id, s, text, opts.request(build_prompt(text, spec, examples))))
    answers = _run_jobs(jobs, endpoint, opts)

    found: dict[str, list[Mention]] = {d.doc_id: [] for d in test}
    tally = _Tally()
    for job, raw in zip(jobs, answers):
        parsed = None if raw is None else parse_response(raw, job.text, opts.occurrence, opts.inventory)
        tally.note(job, parsed)
        if parsed is not None:
            found[job.doc_id].extend(m.shifted(job.offset) for m in parsed.entities)
    docs = [Document(d.doc_id, d.text, tuple(found[d.doc_id])) for d in test]
    return Corpus(test.split_name, docs, (), {"llm": {"mode": "pure", **tally.to_dict()}})


def lemma_locate(surface: str, span_text: str, lemmas: LemmaDictionary) -> Optional[tuple[int, int]]:
    """First token window of ``span_text`` whose canonical form equals that of ``surface``."""
    key = canonical_form(surface, lemmas)
    if not key:
        return None
    n = len(key.split(" "))
    toks = tokenize(span_text)
    for i in range(len(toks) - n + 1):
        s, e = toks[i][0], toks[i + n - 1][1]
        if canonical_form(span_text[s:e], lemmas) == key:
            return s, e
    return None


def merge_inner(outer_doc: Document, inner: Iterable[Mention]) -> Document:
    """Outer predictions plus inner ones; an inner span equal to its outer span is never added."""
    outer_spans = {m.span for m in outer_doc.mentions}
    extra = [m for m in inner if m.span not in outer_spans]
    return outer_doc.with_mentions(outer_doc.mentions + tuple(extra))


def run_hybrid(
    outer_preds: Corpus,
    spec: PromptSpec,
    endpoint: Endpoint,
    options: Optional[RunOptions] = None,
    patterns: str = "type_specific",
    lemma_match: bool = False,
    lemmas: LemmaDictionary = EMPTY,
) -> Corpus:
    """Ask for the entities nested in every outer prediction and merge them back in.

    With ``lemma_match`` an answer string missing from the span is matched
    against the span's token windows by canonical form instead.
    """
    opts = options or RunOptions()
    jobs = []
    for doc in sorted(outer_preds, key=lambda d: d.doc_id):
        for m in doc.mentions:
            req = opts.request(build_hybrid_prompt(m.surface, m.entity_type, spec, patterns))
            jobs.append(_Job(doc.doc_id, m.start, m.surface, req, m))
    answers = _run_jobs(jobs, endpoint, opts)

    inner: dict[str, list[Mention]] = {d.doc_id: [] for d in outer_preds}
    tally = _Tally()
    for job, raw in zip(jobs, answers):
        parsed = None if raw is None else parse_response(raw, job.text, opts.occurrence, opts.inventory)
        tally.note(job, parsed)
        if parsed is None:
            continue
        found = list(parsed.entities)
        if lemma_match:
            for d in parsed.discards:
                if d.reason != "not_in_source":
                    continue
                loc = lemma_locate(d.surface, job.text, lemmas)
                if loc is not None:
                    tally.lemma_matches += 1
                    found.append(Mention(loc[0], loc[1], d.entity_type))
        inner[job.doc_id].extend(m.shifted(job.offset) for m in found)
    docs = [merge_inner(d, inner[d.doc_id]) for d in outer_preds]
    meta = {"llm": {"mode": "hybrid", "patterns": patterns, "lemma_match": lemma_match, **tally.to_dict()}}
    return outer_preds.derive(docs, meta)
