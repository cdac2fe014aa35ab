"""Minimal CoNLL-U reader used to attach token and dependency layers to documents."""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Union

from .corpus import Corpus, Document
from .errors import ParseError

_META_RE = re.compile(r"^#\s*([^=]+?)\s*=\s*(.*)$")


@dataclass
class ConlluToken:
    id: int
    form: str
    head: int  # 0 for the sentence root


@dataclass
class ConlluSentence:
    tokens: list[ConlluToken] = field(default_factory=list)
    metadata: dict[str, str] = field(default_factory=dict)


def parse_conllu(text: str) -> dict[str, list[ConlluSentence]]:
    """Group sentences by ``# newdoc id = ...`` (or ``# doc_id = ...``) comments.

    Multiword-token ranges and empty nodes are skipped.
    """
    docs: dict[str, list[ConlluSentence]] = {}
    current_doc = ""
    sent = ConlluSentence()

    def flush():
        nonlocal sent
        if sent.tokens:
            docs.setdefault(current_doc, []).append(sent)
        sent = ConlluSentence()

    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.rstrip("\r")
        if not line.strip():
            flush()
            continue
        if line.startswith("#"):
            m = _META_RE.match(line)
            if m:
                key, value = m.group(1).strip(), m.group(2).strip()
                if key in ("newdoc id", "doc_id", "newdoc"):
                    flush()
                    current_doc = value
                sent.metadata[key] = value
            continue
        cols = line.split("\t")
        if len(cols) != 10:
            raise ParseError(f"expected 10 columns, got {len(cols)}", lineno)
        if "-" in cols[0] or "." in cols[0]:
            continue
        try:
            sent.tokens.append(ConlluToken(int(cols[0]), cols[1], int(cols[6])))
        except ValueError as exc:
            raise ParseError(f"bad token id or head: {exc}", lineno) from exc
    flush()
    return docs


def read_conllu(path: Union[str, Path]) -> dict[str, list[ConlluSentence]]:
    return parse_conllu(Path(path).read_text(encoding="utf-8"))


def align_tokens(text: str, sentences: Iterable[ConlluSentence]) -> tuple[list[tuple[int, int]], list[int]]:
    """Character spans of every token and document-level head indices (-1 = root)."""
    spans, heads = [], []
    cursor = 0
    for sent in sentences:
        base = len(spans)
        for tok in sent.tokens:
            pos = text.find(tok.form, cursor)
            if pos < 0:
                raise ParseError(f"token {tok.form!r} not found in text after offset {cursor}")
            spans.append((pos, pos + len(tok.form)))
            heads.append(base + tok.head - 1 if tok.head > 0 else -1)
            cursor = pos + len(tok.form)
    return spans, heads


def mention_roots(doc: Document, spans, heads) -> dict[tuple[int, int], int]:
    """Root token of each mention: its first token whose head lies outside the mention."""
    roots = {}
    for m in doc.mentions:
        inside = [i for i, (s, e) in enumerate(spans) if s >= m.start and e <= m.end]
        members = set(inside)
        for i in inside:
            if heads[i] not in members:
                roots[m.span] = i
                break
    return roots


def attach_dependencies(corpus: Corpus, conllu: dict[str, list[ConlluSentence]]) -> Corpus:
    docs = []
    for doc in corpus:
        sents = conllu.get(doc.doc_id)
        if sents is None:
            docs.append(doc)
            continue
        spans, heads = align_tokens(doc.text, sents)
        roots = mention_roots(doc, spans, heads)
        docs.append(Document(doc.doc_id, doc.text, doc.mentions, tuple(spans), doc.sentences, roots))
    return corpus.derive(docs, corpus.metadata)
