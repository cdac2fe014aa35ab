"""Entity corruption: noisy copies of long flat mentions, fold plans and prediction remapping.

Early damage trains on corrupted folds and predicts on clean ones; late
damage trains on clean folds and predicts on corrupted ones. Model training
and inference happen outside the toolkit: this module emits the per-fold
datasets, maps external predictions back onto the original text and merges
them into a pseudo-nested corpus.
"""

from __future__ import annotations

import bisect
import hashlib
import json
import random
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

from .corpus import Corpus, Document, Mention, is_flat
from .errors import (
    DocMismatch,
    InvalidDocument,
    MissingDependencyLayer,
    NotFlat,
    TooFewDocuments,
    TooShort,
    UnknownDoc,
)
from .text import Span, detect_script

SYMBOL_KINDS = ("digits", "letters", "diglets", "semicolons", "commas")
POSITIONS = ("start", "end", "middle", "random", "syntax")
STRATEGIES = ("early", "late")

DIGITS = "0123456789"
CONSONANTS = {
    "latin": "bcdfghjklmnpqrstvwxz",
    "cyrillic": "бвгджзйклмнпрстфхцчшщ",
}


@dataclass(frozen=True)
class CorruptionConfig:
    symbol_kind: str = "letters"
    position: str = "end"
    strategy: str = "early"
    folds: int = 5
    min_words: int = 3
    seed: int = 0
    symbol_length: int = 3
    script: str = "auto"  # auto | latin | cyrillic

    def __post_init__(self):
        if self.symbol_kind not in SYMBOL_KINDS:
            raise ValueError(f"symbol_kind must be one of {SYMBOL_KINDS}")
        if self.position not in POSITIONS:
            raise ValueError(f"position must be one of {POSITIONS}")
        if self.strategy not in STRATEGIES:
            raise ValueError(f"strategy must be one of {STRATEGIES}")
        if self.folds < 2:
            raise ValueError("folds must be >= 2")
        if self.min_words < 2:
            raise ValueError("min_words must be >= 2")
        if self.symbol_length < 1:
            raise ValueError("symbol_length must be >= 1")
        if self.script not in ("auto", *CONSONANTS):
            raise ValueError(f"unknown script {self.script!r}")


def gen_symbol(kind: str, rng: random.Random, script: str = "latin", length: int = 3) -> str:
    """A noise token of ``length`` characters.

    Diglets alternate digit and consonant classes, starting from a random class.
    """
    if kind == "semicolons":
        return ";" * length
    if kind == "commas":
        return "," * length
    consonants = CONSONANTS[script]
    if kind == "digits":
        return "".join(rng.choice(DIGITS) for _ in range(length))
    if kind == "letters":
        return "".join(rng.choice(consonants) for _ in range(length))
    if kind == "diglets":
        pools = [DIGITS, consonants]
        first = rng.randrange(2)
        return "".join(rng.choice(pools[(first + i) % 2]) for i in range(length))
    raise ValueError(f"unknown symbol kind {kind!r}")


def doc_rng(seed: int, doc_id: str) -> random.Random:
    """Per-document RNG stream, independent of processing order."""
    digest = hashlib.sha256(f"{seed}\x00{doc_id}".encode("utf-8")).digest()
    return random.Random(int.from_bytes(digest[:8], "big"))


def select_position(
    mention: Mention,
    tokens: Sequence[Span],
    position: str,
    rng: Optional[random.Random] = None,
    dep_roots: Optional[Mapping[Span, int]] = None,
    min_words: int = 3,
) -> int:
    """Index, relative to the mention's own tokens, of the token to corrupt.

    ``middle`` picks ``(k - 1) // 2`` so even-length mentions take the
    earlier central token.
    """
    inside = [i for i, (s, e) in enumerate(tokens) if s >= mention.start and e <= mention.end]
    k = len(inside)
    if k < min_words:
        raise TooShort(f"mention {mention.span} has {k} tokens, needs {min_words}")
    if position == "start":
        return 0
    if position == "end":
        return k - 1
    if position == "middle":
        return (k - 1) // 2
    if position == "random":
        if rng is None:
            raise ValueError("random position needs an rng")
        return rng.randrange(k)
    if position == "syntax":
        if dep_roots is None or mention.span not in dep_roots:
            raise MissingDependencyLayer(f"no dependency root for mention {mention.span}")
        return inside.index(dep_roots[mention.span])
    raise ValueError(f"unknown position {position!r}")


@dataclass(frozen=True)
class Edit:
    orig_start: int
    orig_end: int
    replacement: str
    mention_span: Span

    @property
    def delta(self) -> int:
        return len(self.replacement) - (self.orig_end - self.orig_start)


@dataclass
class CorruptionRecord:
    """A corrupted copy of one document and the offset map back to the original.

    Positions strictly inside an edited region have no counterpart and map
    to ``None``; every other position maps both ways exactly.
    """

    doc_id: str
    original_text: str
    corrupted_text: str
    edits: tuple[Edit, ...] = ()
    document: Optional[Document] = field(default=None, compare=False)

    def __post_init__(self):
        self.edits = tuple(sorted(self.edits, key=lambda e: e.orig_start))
        self._orig_starts = [e.orig_start for e in self.edits]
        self._new_spans = []
        shift = 0
        for e in self.edits:
            start = e.orig_start + shift
            self._new_spans.append((start, start + len(e.replacement)))
            shift += e.delta
        self._new_starts = [s for s, _ in self._new_spans]
        self._cum = [0]
        for e in self.edits:
            self._cum.append(self._cum[-1] + e.delta)

    @property
    def replaced_spans(self) -> list[Span]:
        """Edited regions in corrupted-text coordinates."""
        return list(self._new_spans)

    def to_corrupted(self, pos: int) -> Optional[int]:
        i = bisect.bisect_left(self._orig_starts, pos)
        # edits before index i start strictly before pos
        if i > 0 and pos < self.edits[i - 1].orig_end:
            return None
        return pos + self._cum[i]

    def to_original(self, pos: int) -> Optional[int]:
        i = bisect.bisect_left(self._new_starts, pos)
        if i > 0 and pos < self._new_spans[i - 1][1]:
            return None
        return pos - self._cum[i]

    def to_dict(self) -> dict:
        return {
            "doc_id": self.doc_id,
            "original_text": self.original_text,
            "corrupted_text": self.corrupted_text,
            "edits": [[e.orig_start, e.orig_end, e.replacement, list(e.mention_span)] for e in self.edits],
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "CorruptionRecord":
        edits = tuple(Edit(s, e, r, tuple(sp)) for s, e, r, sp in obj["edits"])
        return cls(obj["doc_id"], obj["original_text"], obj["corrupted_text"], edits)


def apply_edits(text: str, edits: Sequence[Edit]) -> str:
    parts = []
    cursor = 0
    for e in sorted(edits, key=lambda e: e.orig_start):
        parts.append(text[cursor:e.orig_start])
        parts.append(e.replacement)
        cursor = e.orig_end
    parts.append(text[cursor:])
    return "".join(parts)


def _map_span(record: CorruptionRecord, span: Span) -> Optional[Span]:
    s, e = record.to_corrupted(span[0]), record.to_corrupted(span[1])
    return None if s is None or e is None else (s, e)


def corrupt_document(
    doc: Document,
    config: CorruptionConfig,
    rng: Optional[random.Random] = None,
    script: Optional[str] = None,
) -> CorruptionRecord:
    """Replace one token in every flat mention of at least ``min_words`` tokens.

    Mentions sharing a span are corrupted once. The record's ``document``
    carries the corrupted text with mentions, tokens and sentences remapped.
    """
    if not is_flat(doc):
        raise NotFlat(f"document {doc.doc_id!r} is not flat")
    rng = rng or doc_rng(config.seed, doc.doc_id)
    if script is None:
        script = detect_script(doc.text) if config.script == "auto" else config.script
    tokens = doc.token_spans()

    edits = []
    seen_spans = set()
    edited_tokens = {}
    for m in doc.mentions:
        if m.span in seen_spans:
            continue
        seen_spans.add(m.span)
        inside = [i for i, (s, e) in enumerate(tokens) if s >= m.start and e <= m.end]
        if len(inside) < config.min_words:
            continue
        rel = select_position(m, tokens, config.position, rng, doc.dep_roots, config.min_words)
        tok = inside[rel]
        symbol = gen_symbol(config.symbol_kind, rng, script, config.symbol_length)
        s, e = tokens[tok]
        edits.append(Edit(s, e, symbol, m.span))
        edited_tokens[tok] = len(edits) - 1

    record = CorruptionRecord(doc.doc_id, doc.text, apply_edits(doc.text, edits), tuple(edits))

    new_tokens = []
    new_spans = record.replaced_spans
    order = {e.orig_start: k for k, e in enumerate(record.edits)}
    for i, span in enumerate(tokens):
        if i in edited_tokens:
            new_tokens.append(new_spans[order[span[0]]])
        else:
            new_tokens.append(_map_span(record, span))
    mentions = []
    for m in doc.mentions:
        span = _map_span(record, m.span)
        if span is None:
            raise InvalidDocument(f"{doc.doc_id}: mention {m.span} boundary inside an edit")
        mentions.append(Mention(span[0], span[1], m.entity_type))
    sentences = None
    if doc.sentences is not None:
        mapped = [_map_span(record, sp) for sp in doc.sentences]
        sentences = tuple(mapped) if all(mapped) else None
    roots = None
    if doc.dep_roots is not None:
        roots = {_map_span(record, sp): idx for sp, idx in doc.dep_roots.items()}
    record.document = Document(
        doc.doc_id, record.corrupted_text, tuple(mentions), tuple(new_tokens), sentences, roots
    )
    return record


@dataclass
class FoldPlan:
    assignments: dict[str, int]
    folds: int

    def fold_ids(self, fold: int) -> list[str]:
        return sorted(d for d, f in self.assignments.items() if f == fold)

    def sizes(self) -> list[int]:
        return [len(self.fold_ids(k)) for k in range(self.folds)]


def make_folds(corpus: Corpus, folds: int = 5, seed: int = 0) -> FoldPlan:
    """Balanced per-document partition into ``folds`` groups (sizes differ by at most 1)."""
    ids = sorted(d.doc_id for d in corpus)
    if len(ids) < folds:
        raise TooFewDocuments(f"{len(ids)} documents cannot fill {folds} folds")
    random.Random(seed).shuffle(ids)
    return FoldPlan({doc_id: i % folds for i, doc_id in enumerate(ids)}, folds)


@dataclass
class FoldDataset:
    fold: int
    train: Corpus
    predict: Corpus
    train_records: dict[str, CorruptionRecord] = field(default_factory=dict)
    predict_records: dict[str, CorruptionRecord] = field(default_factory=dict)


def corpus_script(corpus: Corpus, config: CorruptionConfig) -> str:
    if config.script != "auto":
        return config.script
    return detect_script("".join(d.text for d in corpus))


def corrupt_corpus(corpus: Corpus, config: CorruptionConfig) -> dict[str, CorruptionRecord]:
    script = corpus_script(corpus, config)
    return {d.doc_id: corrupt_document(d, config, script=script) for d in corpus}


def emit_fold_datasets(
    corpus: Corpus, config: CorruptionConfig, plan: Optional[FoldPlan] = None
) -> list[FoldDataset]:
    """Per-fold train/predict corpora for the configured damage strategy."""
    plan = plan or make_folds(corpus, config.folds, config.seed)
    records = corrupt_corpus(corpus, config)
    docs = corpus.by_id()
    meta = {"corruption": {
        "symbol": config.symbol_kind, "position": config.position, "strategy": config.strategy,
        "folds": config.folds, "min_words": config.min_words, "seed": config.seed,
    }}
    out = []
    for k in range(plan.folds):
        predict_ids = plan.fold_ids(k)
        held = set(predict_ids)
        train_ids = sorted(d for d in docs if d not in held)
        if config.strategy == "early":
            train = [records[d].document for d in train_ids]
            predict = [docs[d] for d in predict_ids]
            train_recs = {d: records[d] for d in train_ids}
            predict_recs = {}
        else:
            train = [docs[d] for d in train_ids]
            predict = [records[d].document for d in predict_ids]
            train_recs = {}
            predict_recs = {d: records[d] for d in predict_ids}
        out.append(FoldDataset(
            k,
            Corpus(f"fold{k}-train", train, corpus.type_inventory, dict(meta)),
            Corpus(f"fold{k}-predict", predict, corpus.type_inventory, dict(meta)),
            train_recs,
            predict_recs,
        ))
    return out


def remap_predictions(
    preds: Corpus, records: Mapping[str, CorruptionRecord], passthrough_missing: bool = False
) -> Corpus:
    """Translate predictions on corrupted text back to original offsets.

    Predictions overlapping an edited region are dropped and counted in
    ``metadata["remap"]``. Documents without a record raise ``UnknownDoc``
    unless ``passthrough_missing`` is set.
    """
    docs = []
    dropped = 0
    per_doc = {}
    for doc in preds:
        record = records.get(doc.doc_id)
        if record is None:
            if not passthrough_missing:
                raise UnknownDoc(f"no corruption record for document {doc.doc_id!r}")
            docs.append(doc)
            continue
        if doc.text != record.corrupted_text:
            raise InvalidDocument(f"{doc.doc_id}: prediction text differs from the corrupted text")
        replaced = record.replaced_spans
        kept = []
        n_drop = 0
        for m in doc.mentions:
            if any(m.start < e and s < m.end for s, e in replaced):
                n_drop += 1
                continue
            s, e = record.to_original(m.start), record.to_original(m.end)
            kept.append(Mention(s, e, m.entity_type))
        dropped += n_drop
        per_doc[doc.doc_id] = n_drop
        docs.append(Document(doc.doc_id, record.original_text, tuple(kept)))
    meta = dict(preds.metadata)
    meta["remap"] = {"dropped": dropped, "dropped_per_doc": dict(sorted(per_doc.items()))}
    return Corpus(preds.split_name, docs, (), meta)


def build_pseudo_nested(flat: Corpus, remapped_preds: Corpus) -> Corpus:
    """Flat mentions plus every prediction that is a proper sub-span of one of them."""
    preds = remapped_preds.by_id()
    unknown = set(preds) - {d.doc_id for d in flat}
    if unknown:
        raise DocMismatch(f"predictions for unknown documents: {sorted(unknown)[:5]}")
    kept_total = duplicates = outside = 0
    docs = []
    for doc in flat:
        pred_doc = preds.get(doc.doc_id)
        if pred_doc is None:
            docs.append(doc)
            continue
        if pred_doc.text != doc.text:
            raise DocMismatch(f"{doc.doc_id}: prediction text differs from the flat document")
        flat_spans = {m.span for m in doc.mentions}
        kept = []
        for p in pred_doc.mentions:
            if p.span in flat_spans:
                duplicates += 1
            elif any(f.strictly_contains(p) for f in doc.mentions):
                kept.append(p)
            else:
                outside += 1
        kept_total += len(kept)
        docs.append(doc.with_mentions(doc.mentions + tuple(kept)))
    meta = dict(flat.metadata)
    meta["pseudo_nested"] = {
        "kept": kept_total,
        "dropped_duplicate_of_flat": duplicates,
        "dropped_outside_or_crossing": outside,
        "assumption": "only predictions strictly inside a flat mention are kept",
    }
    return flat.derive(docs, meta)


def write_records(records: Mapping[str, CorruptionRecord], path, meta: Optional[dict] = None) -> None:
    """JSONL of corruption records sorted by ``doc_id``, behind an optional metadata header."""
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        if meta is not None:
            f.write(json.dumps({"__meta__": meta}, ensure_ascii=False) + "\n")
        for doc_id in sorted(records):
            f.write(json.dumps(records[doc_id].to_dict(), ensure_ascii=False) + "\n")


def read_records(path) -> dict[str, CorruptionRecord]:
    out = {}
    with open(path, encoding="utf-8") as f:
        for line in f:
            if not line.strip():
                continue
            obj = json.loads(line)
            if "__meta__" in obj:
                continue
            rec = CorruptionRecord.from_dict(obj)
            out[rec.doc_id] = rec
    return out
