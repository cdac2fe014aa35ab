"""Documents, mentions and corpora, plus flat conversion and corpus statistics."""

from __future__ import annotations

import dataclasses
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, Optional, Sequence

from .errors import CrossingSpans, InvalidDocument
from .text import Span, split_sentences, tokenize


@dataclass(frozen=True, order=True)
class Mention:
    """A typed character span ``[start, end)`` inside one document."""

    start: int
    end: int
    entity_type: str
    surface: str = field(default="", compare=False, repr=False)

    @property
    def span(self) -> Span:
        return (self.start, self.end)

    @property
    def key(self) -> tuple[int, int, str]:
        return (self.start, self.end, self.entity_type)

    def contains(self, other: "Mention") -> bool:
        """Non-strict containment: ``other`` lies within this mention's span."""
        return self.start <= other.start and other.end <= self.end

    def strictly_contains(self, other: "Mention") -> bool:
        return self.contains(other) and self.span != other.span

    def overlaps(self, other: "Mention") -> bool:
        return self.start < other.end and other.start < self.end

    def shifted(self, delta: int) -> "Mention":
        return Mention(self.start + delta, self.end + delta, self.entity_type, self.surface)


@dataclass(frozen=True)
class Document:
    """One text with its mention set and optional token, sentence and dependency layers.

    Mentions are deduplicated on ``(start, end, type)``, sorted, and carry
    their surface string. ``dep_roots`` maps a mention span to the
    document-level index of its syntactic root token.
    """

    doc_id: str
    text: str
    mentions: tuple[Mention, ...] = ()
    tokens: Optional[tuple[Span, ...]] = None
    sentences: Optional[tuple[Span, ...]] = None
    dep_roots: Optional[Mapping[Span, int]] = None

    def __post_init__(self):
        n = len(self.text)
        unique = {}
        for m in self.mentions:
            if not m.entity_type:
                raise InvalidDocument(f"{self.doc_id}: mention {m.span} has an empty type")
            if not 0 <= m.start < m.end <= n:
                raise InvalidDocument(
                    f"{self.doc_id}: mention {m.span} outside text of length {n}"
                )
            unique[m.key] = Mention(m.start, m.end, m.entity_type, self.text[m.start:m.end])
        object.__setattr__(self, "mentions", tuple(sorted(unique.values())))

        if self.tokens is not None:
            toks = tuple((int(s), int(e)) for s, e in self.tokens)
            prev_end = 0
            for s, e in toks:
                if s < prev_end or not s < e or e > n:
                    raise InvalidDocument(f"{self.doc_id}: token layer unsorted or overlapping at {(s, e)}")
                prev_end = e
            object.__setattr__(self, "tokens", toks)
        if self.sentences is not None:
            object.__setattr__(self, "sentences", tuple((int(s), int(e)) for s, e in self.sentences))
        if self.dep_roots is not None:
            toks = self.token_spans()
            roots = {}
            for (s, e), idx in self.dep_roots.items():
                ts, te = toks[idx]
                if not (s <= ts and te <= e):
                    raise InvalidDocument(
                        f"{self.doc_id}: root token {idx} lies outside mention {(s, e)}"
                    )
                roots[(int(s), int(e))] = int(idx)
            object.__setattr__(self, "dep_roots", roots)

    def token_spans(self) -> tuple[Span, ...]:
        if self.tokens is not None:
            return self.tokens
        return tuple(tokenize(self.text))

    def sentence_spans(self, heuristic: bool = True) -> tuple[Span, ...]:
        """The sentence layer, else a heuristic split (or the whole text)."""
        if self.sentences is not None:
            return self.sentences
        if heuristic:
            return tuple(split_sentences(self.text, protect=(m.span for m in self.mentions)))
        return ((0, len(self.text)),) if self.text else ()

    def mention_token_indices(self, mention: Mention) -> list[int]:
        return [i for i, (s, e) in enumerate(self.token_spans()) if s >= mention.start and e <= mention.end]

    def with_mentions(self, mentions: Iterable[Mention]) -> "Document":
        return dataclasses.replace(self, mentions=tuple(mentions))


@dataclass
class Corpus:
    split_name: str = "train"
    documents: list[Document] = field(default_factory=list)
    type_inventory: tuple[str, ...] = ()
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.documents = list(self.documents)
        seen = set()
        for doc in self.documents:
            if doc.doc_id in seen:
                raise InvalidDocument(f"duplicate doc_id {doc.doc_id!r}")
            seen.add(doc.doc_id)
        present = sorted({m.entity_type for d in self.documents for m in d.mentions})
        if not self.type_inventory:
            self.type_inventory = tuple(present)
        else:
            self.type_inventory = tuple(self.type_inventory)
            unknown = set(present) - set(self.type_inventory)
            if unknown:
                raise InvalidDocument(f"mention types outside inventory: {sorted(unknown)}")

    def __iter__(self) -> Iterator[Document]:
        return iter(self.documents)

    def __len__(self) -> int:
        return len(self.documents)

    def get(self, doc_id: str) -> Document:
        for doc in self.documents:
            if doc.doc_id == doc_id:
                return doc
        raise KeyError(doc_id)

    def by_id(self) -> dict[str, Document]:
        return {d.doc_id: d for d in self.documents}

    @property
    def mention_count(self) -> int:
        return sum(len(d.mentions) for d in self.documents)

    def derive(self, documents: Iterable[Document], metadata: Optional[dict] = None) -> "Corpus":
        """A corpus with the same split name and new documents.

        The type inventory is kept when it still covers the new mentions,
        otherwise it is rebuilt from them.
        """
        documents = list(documents)
        present = {m.entity_type for d in documents for m in d.mentions}
        inventory = self.type_inventory if present <= set(self.type_inventory) else ()
        return Corpus(self.split_name, documents, inventory, dict(metadata or {}))


def _unique_spans(mentions: Iterable[Mention]) -> list[Span]:
    return sorted({m.span for m in mentions}, key=lambda sp: (sp[0], -sp[1]))


def container_counts(mentions: Sequence[Mention]) -> dict[Span, int]:
    """Number of distinct spans strictly containing each mention's span."""
    counts = {}
    stack: list[Span] = []
    for span in _unique_spans(mentions):
        start, end = span
        while stack and stack[-1][1] <= start:
            stack.pop()
        counts[span] = sum(1 for _, e in stack if e >= end)
        stack.append(span)
    return counts


def find_crossing(mentions: Sequence[Mention]) -> Optional[tuple[Mention, Mention]]:
    """First pair of partially overlapping, non-nested mentions, if any."""
    by_span = {}
    for m in mentions:
        by_span.setdefault(m.span, m)
    stack: list[Span] = []
    for span in _unique_spans(mentions):
        start, end = span
        while stack and stack[-1][1] <= start:
            stack.pop()
        if stack and stack[-1][1] < end:
            return by_span[stack[-1]], by_span[span]
        stack.append(span)
    return None


def outer_mentions(mentions: Sequence[Mention]) -> list[Mention]:
    """Mentions not strictly contained in another mention."""
    counts = container_counts(mentions)
    return [m for m in mentions if counts[m.span] == 0]


def is_flat(doc: Document) -> bool:
    ms = doc.mentions
    for a, b in zip(ms, ms[1:]):
        if b.start < a.end and a.span != b.span:
            return False
    # non-adjacent overlaps are impossible once adjacent pairs are disjoint
    return True


def flatten_document(doc: Document, allow_crossing: bool = False) -> Document:
    if not allow_crossing:
        pair = find_crossing(doc.mentions)
        if pair is not None:
            raise CrossingSpans(doc.doc_id, *pair)
    return doc.with_mentions(outer_mentions(doc.mentions))


def flatten(corpus: Corpus, allow_crossing: bool = False) -> Corpus:
    """Keep only the outermost mentions of every document.

    Equal-span mentions of different types are both kept. Crossing mentions
    raise :class:`CrossingSpans` unless ``allow_crossing`` is set, in which
    case both members of a crossing pair survive (neither contains the other).
    """
    docs = [flatten_document(d, allow_crossing) for d in corpus]
    return corpus.derive(docs, corpus.metadata)


@dataclass
class TypeCounts:
    total: int = 0
    inner: int = 0
    outer: int = 0


@dataclass
class CorpusStats:
    documents: int = 0
    total: int = 0
    inner: int = 0
    outer: int = 0
    per_type: dict[str, TypeCounts] = field(default_factory=dict)
    depth_histogram: dict[int, int] = field(default_factory=dict)
    crossing_pairs: int = 0

    @property
    def nested_fraction(self) -> float:
        return self.inner / self.total if self.total else 0.0

    def to_dict(self) -> dict:
        return {
            "documents": self.documents,
            "total": self.total,
            "inner": self.inner,
            "outer": self.outer,
            "nested_fraction": round(self.nested_fraction, 6),
            "crossing_pairs": self.crossing_pairs,
            "depth_histogram": {str(k): v for k, v in sorted(self.depth_histogram.items())},
            "per_type": {
                t: dataclasses.asdict(c) for t, c in sorted(self.per_type.items())
            },
        }

    def format_text(self) -> str:
        lines = [
            f"documents  {self.documents}",
            f"mentions   {self.total} (outer {self.outer}, inner {self.inner}, "
            f"nested {100 * self.nested_fraction:.2f}%)",
            "depth      " + ", ".join(f"{k}:{v}" for k, v in sorted(self.depth_histogram.items())),
            "",
            f"{'type':<20}{'total':>8}{'outer':>8}{'inner':>8}",
        ]
        for t, c in sorted(self.per_type.items(), key=lambda kv: (-kv[1].total, kv[0])):
            lines.append(f"{t:<20}{c.total:>8}{c.outer:>8}{c.inner:>8}")
        return "\n".join(lines)


def _count_crossings(mentions: Sequence[Mention]) -> int:
    spans = _unique_spans(mentions)
    n = 0
    for i, (s1, e1) in enumerate(spans):
        for s2, e2 in spans[i + 1:]:
            if s2 >= e1:
                break
            if e2 > e1 and s2 > s1:
                n += 1
    return n


def corpus_stats(corpus: Corpus) -> CorpusStats:
    """Inner/outer counts per type and nesting depth (outermost level is depth 1).

    A mention is inner when another mention's span strictly contains it.
    """
    stats = CorpusStats(documents=len(corpus))
    depth = Counter()
    for doc in corpus:
        counts = container_counts(doc.mentions)
        stats.crossing_pairs += _count_crossings(doc.mentions)
        for m in doc.mentions:
            tc = stats.per_type.setdefault(m.entity_type, TypeCounts())
            tc.total += 1
            stats.total += 1
            level = counts[m.span] + 1
            depth[level] += 1
            if level > 1:
                tc.inner += 1
                stats.inner += 1
            else:
                tc.outer += 1
                stats.outer += 1
    stats.depth_histogram = dict(sorted(depth.items()))
    return stats
