"""Positive / negative / neutral partition of candidate spans and loss-mask export.

Neutral spans get loss weight 0; positive and negative spans get weight 1.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable, Optional, Sequence, Union

from .corpus import Corpus, Document, Mention, is_flat
from .errors import NotFlat
from .inclusions import SurfaceIndex
from .lemmas import canonical_form

log = logging.getLogger(__name__)

POSITIVE, NEGATIVE, NEUTRAL = "Positive", "Negative", "Neutral"
LABELS = (POSITIVE, NEGATIVE, NEUTRAL)
MODES = ("content_aware", "geometric")
GEOMETRIC_REASON = "within-entity"
INCLUSION_REASON = "inclusion"
CONFLICT_REASON = "conflict"


@dataclass(frozen=True)
class CandidateSpan:
    start: int
    end: int
    token_len: int


@dataclass(frozen=True)
class SpanLabel:
    doc_id: str
    start: int
    end: int
    token_len: int
    label: str
    pos_type: Optional[str] = None
    reason: Optional[str] = None

    @property
    def key(self):
        return (self.doc_id, self.start, self.end)

    @property
    def weight(self) -> int:
        return loss_weight(self.label)


def loss_weight(label: str) -> int:
    return 0 if label == NEUTRAL else 1


def enumerate_spans(doc: Document, max_len_tokens: int = 30, heuristic_sentences: bool = False) -> list[CandidateSpan]:
    """All token-aligned spans of 1..max_len tokens inside each sentence.

    Without a sentence layer the whole document is one sentence unless
    ``heuristic_sentences`` asks for the built-in splitter.
    """
    tokens = doc.token_spans()
    seen = set()
    out = []
    for s_start, s_end in doc.sentence_spans(heuristic=heuristic_sentences):
        sent = [t for t in tokens if t[0] >= s_start and t[1] <= s_end]
        for i in range(len(sent)):
            for k in range(1, min(max_len_tokens, len(sent) - i) + 1):
                span = (sent[i][0], sent[i + k - 1][1])
                if span not in seen:
                    seen.add(span)
                    out.append(CandidateSpan(span[0], span[1], k))
    out.sort(key=lambda c: (c.start, c.end))
    return out


def token_length(doc: Document, start: int, end: int) -> int:
    return sum(1 for s, e in doc.token_spans() if s < end and start < e)


def overlength_mentions(doc: Document, max_len_tokens: int) -> list[Mention]:
    return [m for m in doc.mentions if token_length(doc, m.start, m.end) > max_len_tokens]


def _neutral_reason(text: str, index: SurfaceIndex, match: str) -> Optional[str]:
    if match == "exact":
        return text if text in index.exact else None
    key = canonical_form(text, index.lemmas)
    return key if key in index.canonical else None


def partition_spans(
    doc: Document,
    candidates: Sequence[CandidateSpan],
    index: Optional[SurfaceIndex] = None,
    mode: str = "content_aware",
    match: str = "exact",
    max_len_tokens: Optional[int] = None,
) -> list[SpanLabel]:
    """Label every candidate span of a flat document.

    Spans equal to a flat mention are Positive (one label per type). A span
    strictly inside a flat mention is Neutral in geometric mode, and in
    content-aware mode only when its surface (``match="exact"``) or
    canonical form (``match="lemmatized"``) is an index key. All other spans
    are Negative. Flat mentions that are not token-aligned candidates are
    still emitted as Positive unless longer than ``max_len_tokens``.
    """
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    if mode == "content_aware" and index is None:
        raise ValueError("content_aware mode needs a surface index")
    if not is_flat(doc):
        raise NotFlat(f"document {doc.doc_id!r} is not flat")

    by_span: dict[tuple[int, int], list[str]] = {}
    for m in doc.mentions:
        by_span.setdefault(m.span, []).append(m.entity_type)
    flat = sorted(by_span)

    labels = []
    covered = set()
    for c in candidates:
        span = (c.start, c.end)
        if span in by_span:
            covered.add(span)
            for t in by_span[span]:
                labels.append(SpanLabel(doc.doc_id, c.start, c.end, c.token_len, POSITIVE, t))
            continue
        inside = any(s <= c.start and c.end <= e for s, e in flat)
        if inside:
            if mode == "geometric":
                labels.append(SpanLabel(doc.doc_id, c.start, c.end, c.token_len, NEUTRAL, reason=GEOMETRIC_REASON))
                continue
            reason = _neutral_reason(doc.text[c.start:c.end], index, match)
            if reason is not None:
                labels.append(SpanLabel(doc.doc_id, c.start, c.end, c.token_len, NEUTRAL, reason=reason))
                continue
        labels.append(SpanLabel(doc.doc_id, c.start, c.end, c.token_len, NEGATIVE))

    for span, types in by_span.items():
        if span in covered:
            continue
        n = token_length(doc, *span)
        if max_len_tokens is not None and n > max_len_tokens:
            log.warning("%s: mention %s spans %d tokens (> %d)", doc.doc_id, span, n, max_len_tokens)
            continue
        for t in types:
            labels.append(SpanLabel(doc.doc_id, span[0], span[1], n, POSITIVE, t))
    return sort_labels(labels)


def sort_labels(labels: Iterable[SpanLabel]) -> list[SpanLabel]:
    return sorted(labels, key=lambda l: (l.doc_id, l.start, l.end, l.label, l.pos_type or "", l.reason or ""))


@dataclass
class FlipStats:
    from_neutral: int = 0
    from_negative: int = 0
    conflicts: int = 0
    unmatched: int = 0


def with_inclusion_positives(
    labels: Sequence[SpanLabel],
    inclusions: Iterable[tuple[str, Mention]],
    stats: Optional[FlipStats] = None,
) -> list[SpanLabel]:
    """Turn inclusion spans into Positive labels carrying the inclusion's type.

    ``inclusions`` yields ``(doc_id, mention)`` pairs. A span that is already
    Positive with a different type keeps its label and gains a second
    Positive record flagged with the ``conflict`` reason. Counts go into
    ``stats`` when one is passed.
    """
    by_key: dict[tuple, list[int]] = {}
    for i, l in enumerate(labels):
        by_key.setdefault(l.key, []).append(i)
    out = list(labels)
    extra = []
    stats = stats if stats is not None else FlipStats()
    for doc_id, m in inclusions:
        idxs = by_key.get((doc_id, m.start, m.end))
        if not idxs:
            stats.unmatched += 1
            continue
        current = [out[i] for i in idxs]
        positives = [l for l in current if l.label == POSITIVE]
        if positives:
            if all(l.pos_type != m.entity_type for l in positives):
                stats.conflicts += 1
                log.warning("%s: inclusion %s %s conflicts with positive %s",
                            doc_id, m.span, m.entity_type, positives[0].pos_type)
                extra.append(replace(positives[0], pos_type=m.entity_type, reason=CONFLICT_REASON))
            continue
        i = idxs[0]
        if out[i].label == NEUTRAL:
            stats.from_neutral += 1
        else:
            stats.from_negative += 1
        out[i] = replace(out[i], label=POSITIVE, pos_type=m.entity_type, reason=INCLUSION_REASON)
    return sort_labels(out + extra)


def neutralize_corpus(
    corpus: Corpus,
    index: Optional[SurfaceIndex],
    mode: str = "content_aware",
    match: str = "exact",
    max_len_tokens: int = 30,
    heuristic_sentences: bool = False,
) -> list[SpanLabel]:
    labels = []
    for doc in sorted(corpus, key=lambda d: d.doc_id):
        cands = enumerate_spans(doc, max_len_tokens, heuristic_sentences)
        labels.extend(partition_spans(doc, cands, index, mode, match, max_len_tokens))
    return labels


def _escape(value: Optional[str]) -> str:
    if value is None:
        return "-"
    return value.replace("\\", "\\\\").replace("\t", "\\t").replace("\n", "\\n").replace("\r", "\\r")


def _unescape(value: str) -> Optional[str]:
    if value == "-":
        return None
    out = []
    it = iter(value)
    for ch in it:
        if ch == "\\":
            nxt = next(it, "")
            out.append({"t": "\t", "n": "\n", "r": "\r", "\\": "\\"}.get(nxt, nxt))
        else:
            out.append(ch)
    return "".join(out)


def format_span_labels(labels: Iterable[SpanLabel], header: Optional[str] = None) -> str:
    lines = []
    if header:
        lines.extend(f"# {line}" for line in header.splitlines())
    for l in sort_labels(labels):
        lines.append("\t".join([
            l.doc_id, str(l.start), str(l.end), l.label, _escape(l.pos_type), _escape(l.reason),
        ]))
    return "\n".join(lines) + "\n"


def export_span_labels(labels: Iterable[SpanLabel], path: Union[str, Path], header: Optional[str] = None) -> None:
    """Write ``doc_id start end label type_or_- reason_or_-`` rows sorted by (doc_id, start, end)."""
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(format_span_labels(labels, header))


def read_span_labels(path: Union[str, Path]) -> list[SpanLabel]:
    """Read an exported file back. ``token_len`` is not stored and comes back as 0."""
    labels = []
    with open(path, encoding="utf-8") as f:
        for line in f:
            if not line.strip() or line.startswith("#"):
                continue
            doc_id, start, end, label, etype, reason = line.rstrip("\n").split("\t")
            labels.append(SpanLabel(doc_id, int(start), int(end), 0, label, _unescape(etype), _unescape(reason)))
    return labels


def weight_summary(labels: Iterable[SpanLabel]) -> dict[str, int]:
    counts = {POSITIVE: 0, NEGATIVE: 0, NEUTRAL: 0}
    for l in labels:
        counts[l.label] += 1
    counts["weighted"] = counts[POSITIVE] + counts[NEGATIVE]
    return counts
