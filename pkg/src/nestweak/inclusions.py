"""Pseudo-nested mentions mined by matching known surfaces inside flat mentions."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Optional

from .corpus import Corpus, Document, Mention, container_counts, is_flat
from .errors import DocMismatch, NotFlat
from .lemmas import EMPTY, LemmaDictionary, canonical_form

MODES = ("exact", "lemmatized")

ASSUMPTIONS = (
    "exact matches must start and end on token boundaries of the outer mention",
    "ambiguous surfaces take their most frequent type, ties broken by type name",
    "lemmatized candidates are contiguous token windows of the outer mention",
)

# NEREL train exact-inclusion totals as published (per-type table and running text disagree)
REFERENCE_COUNTS = {"nerel_train_exact_table": 6458, "nerel_train_exact_text": 6481}


def resolve_type(counts: Counter) -> str:
    return min(counts.items(), key=lambda kv: (-kv[1], kv[0]))[0]


@dataclass
class SurfaceIndex:
    """Surface and canonical-form lookups over the mentions of a corpus."""

    exact: dict[str, Counter] = field(default_factory=dict)
    canonical: dict[str, Counter] = field(default_factory=dict)
    canonical_surfaces: dict[str, Counter] = field(default_factory=dict)
    lemmas: LemmaDictionary = field(default_factory=LemmaDictionary)

    def add(self, surface: str, entity_type: str) -> None:
        if not surface:
            return
        self.exact.setdefault(surface, Counter())[entity_type] += 1
        key = canonical_form(surface, self.lemmas)
        if key:
            self.canonical.setdefault(key, Counter())[entity_type] += 1
            self.canonical_surfaces.setdefault(key, Counter())[surface] += 1

    def merge(self, other: "SurfaceIndex") -> None:
        for src, dst in ((other.exact, self.exact), (other.canonical, self.canonical),
                         (other.canonical_surfaces, self.canonical_surfaces)):
            for key, counts in src.items():
                dst.setdefault(key, Counter()).update(counts)

    def exact_type(self, surface: str) -> Optional[str]:
        counts = self.exact.get(surface)
        return resolve_type(counts) if counts else None

    def canonical_type(self, key: str) -> Optional[str]:
        counts = self.canonical.get(key)
        return resolve_type(counts) if counts else None

    def representative(self, key: str) -> str:
        counts = self.canonical_surfaces[key]
        return min(counts.items(), key=lambda kv: (-kv[1], kv[0]))[0]


def build_surface_index(corpus: Corpus, lemmas: LemmaDictionary = EMPTY) -> SurfaceIndex:
    index = SurfaceIndex(lemmas=lemmas)
    for doc in corpus:
        for m in doc.mentions:
            index.add(m.surface, m.entity_type)
    return index


def _windows(doc: Document, mention: Mention):
    """Yield ``(first_token, last_token, start, end)`` for every proper token window."""
    toks = [t for t in doc.token_spans() if t[0] >= mention.start and t[1] <= mention.end]
    for i in range(len(toks)):
        for j in range(i, len(toks)):
            start, end = toks[i][0], toks[j][1]
            if (start, end) != mention.span:
                yield i, j, start, end, toks


def document_inclusions(doc: Document, index: SurfaceIndex, mode: str = "exact") -> list[Mention]:
    """Inclusion mentions found inside the (flat) mentions of one document."""
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    found = {}
    for outer in doc.mentions:
        lemma_cache = None
        for i, j, start, end, toks in _windows(doc, outer):
            if mode == "exact":
                etype = index.exact_type(doc.text[start:end])
            else:
                if lemma_cache is None:
                    lemma_cache = [index.lemmas.lemma(doc.text[s:e]) for s, e in toks]
                etype = index.canonical_type(" ".join(sorted(lemma_cache[i:j + 1])))
            if etype is not None:
                m = Mention(start, end, etype)
                found[m.key] = m
    return sorted(found.values())


def extract_inclusions(corpus: Corpus, index: SurfaceIndex, mode: str = "exact") -> Corpus:
    """Add inclusion mentions to every document of a flat corpus.

    Existing mentions are kept untouched. The returned corpus metadata
    records the mode, the number added and the matching assumptions.
    """
    docs = []
    added = 0
    for doc in corpus:
        if not is_flat(doc):
            raise NotFlat(f"document {doc.doc_id!r} contains nested or overlapping mentions")
        new = document_inclusions(doc, index, mode)
        added += len(new)
        docs.append(doc.with_mentions(doc.mentions + tuple(new)))
    meta = dict(corpus.metadata)
    meta["inclusions"] = {"mode": mode, "added": added, "assumptions": list(ASSUMPTIONS)}
    return corpus.derive(docs, meta)


@dataclass
class InclusionScore:
    candidates: int = 0
    span_matches: int = 0
    span_and_type_matches: int = 0
    gold_inner: int = 0

    @property
    def precision(self) -> float:
        return self.span_and_type_matches / self.candidates if self.candidates else 0.0

    @property
    def recall(self) -> float:
        return self.span_and_type_matches / self.gold_inner if self.gold_inner else 0.0

    @property
    def type_accuracy(self) -> float:
        return self.span_and_type_matches / self.span_matches if self.span_matches else 0.0

    def to_dict(self) -> dict:
        return {
            "candidates": self.candidates,
            "span_matches": self.span_matches,
            "span_and_type_matches": self.span_and_type_matches,
            "gold_inner": self.gold_inner,
            "precision": round(self.precision, 6),
            "recall": round(self.recall, 6),
            "type_accuracy": round(self.type_accuracy, 6),
        }


@dataclass
class InclusionReport:
    overall: InclusionScore
    per_type: dict[str, InclusionScore]

    def to_dict(self) -> dict:
        return {
            "overall": self.overall.to_dict(),
            "per_type": {t: s.to_dict() for t, s in sorted(self.per_type.items())},
            "reference_counts": dict(REFERENCE_COUNTS),
            "assumptions": list(ASSUMPTIONS),
        }

    def format_text(self) -> str:
        o = self.overall
        lines = [
            f"{'type':<20}{'gold inner':>11}{'cand.':>8}{'prec.%':>8}",
        ]
        rows = sorted(self.per_type.items(), key=lambda kv: (-kv[1].candidates, kv[0]))
        for t, s in rows:
            lines.append(f"{t:<20}{s.gold_inner:>11}{s.candidates:>8}{100 * s.precision:>8.2f}")
        lines.append(f"{'Total':<20}{o.gold_inner:>11}{o.candidates:>8}{100 * o.precision:>8.2f}")
        lines.append("")
        lines.append(
            f"precision {100 * o.precision:.2f}%  recall {100 * o.recall:.2f}%  "
            f"type accuracy {100 * o.type_accuracy:.2f}% "
            f"({o.span_and_type_matches} of {o.span_matches} span matches)"
        )
        lines.append(
            "reference NEREL train exact totals: "
            + ", ".join(f"{k}={v}" for k, v in REFERENCE_COUNTS.items())
        )
        lines.extend(f"assumption: {a}" for a in ASSUMPTIONS)
        return "\n".join(lines)


def score_inclusions(pseudo: Corpus, gold_nested: Corpus) -> InclusionReport:
    """Score pseudo-nested mentions against gold inner mentions.

    Candidates are the pseudo mentions that are not outer gold mentions;
    gold inner mentions are those strictly contained in another gold span.
    """
    gold_docs = gold_nested.by_id()
    if set(gold_docs) != {d.doc_id for d in pseudo}:
        raise DocMismatch("pseudo and gold corpora cover different documents")

    overall = InclusionScore()
    per_type: dict[str, InclusionScore] = {}

    def bucket(t):
        return per_type.setdefault(t, InclusionScore())

    for doc in pseudo:
        gold = gold_docs[doc.doc_id]
        depth = container_counts(gold.mentions)
        inner = [m for m in gold.mentions if depth[m.span] > 0]
        outer_keys = {m.key for m in gold.mentions if depth[m.span] == 0}
        inner_keys = {m.key for m in inner}
        inner_spans = {m.span for m in inner}
        for m in inner:
            overall.gold_inner += 1
            bucket(m.entity_type).gold_inner += 1
        for m in doc.mentions:
            if m.key in outer_keys:
                continue
            for s in (overall, bucket(m.entity_type)):
                s.candidates += 1
                if m.span in inner_spans:
                    s.span_matches += 1
                if m.key in inner_keys:
                    s.span_and_type_matches += 1
    return InclusionReport(overall, per_type)
