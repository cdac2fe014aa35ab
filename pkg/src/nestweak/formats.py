"""BRAT standoff and JSONL corpus I/O."""

from __future__ import annotations

import json
import logging
import re
from pathlib import Path
from typing import Iterable, Optional, Union

from .corpus import Corpus, Document, Mention
from .errors import DiscontinuousSpan, InvalidDocument, MalformedLine, OffsetMismatch, ParseError

log = logging.getLogger(__name__)

PathLike = Union[str, Path]
META_KEY = "__meta__"

_WS_RE = re.compile(r"\s")
_WORD_CHAR_RE = re.compile(r"[^\W_]")


def _byte_to_char(text: str):
    encoded_lengths = [len(ch.encode("utf-8")) for ch in text]
    table = {0: 0}
    pos = 0
    for i, n in enumerate(encoded_lengths):
        pos += n
        table[pos] = i + 1
    return table


def _mid_word(text: str, pos: int) -> bool:
    return 0 < pos < len(text) and bool(_WORD_CHAR_RE.match(text[pos - 1])) and bool(_WORD_CHAR_RE.match(text[pos]))


def parse_brat(
    ann_text: str, txt_text: str, doc_id: str = "", offsets: str = "char", boundaries: str = "strict"
) -> Document:
    """Build a Document from the contents of a ``.ann`` / ``.txt`` pair.

    Only text-bound ``T`` lines are read; relations, events, attributes and
    notes are skipped. ``offsets="byte"`` reinterprets the numbers as UTF-8
    byte offsets. A surface that differs from the text slice only by
    whitespace characters (BRAT writes line breaks as spaces) is accepted.
    With ``boundaries="strict"`` a span that starts or ends inside a word is
    an ``OffsetMismatch`` as well; ``"lenient"`` accepts it.
    """
    if boundaries not in ("strict", "lenient"):
        raise ValueError(f"boundaries must be 'strict' or 'lenient', not {boundaries!r}")
    if offsets not in ("char", "byte"):
        raise ValueError(f"offsets must be 'char' or 'byte', not {offsets!r}")
    byte_table = _byte_to_char(txt_text) if offsets == "byte" else None
    mentions = []
    for lineno, raw in enumerate(ann_text.splitlines(), start=1):
        line = raw.rstrip("\r")
        if not line.startswith("T"):
            continue
        fields = line.split("\t")
        if len(fields) != 3:
            raise MalformedLine(f"expected 3 tab-separated fields, got {len(fields)}", lineno)
        _, type_and_offsets, surface = fields
        parts = type_and_offsets.split(" ", 1)
        if len(parts) != 2:
            raise MalformedLine(f"missing offsets in {type_and_offsets!r}", lineno)
        etype, offs = parts
        if ";" in offs:
            raise DiscontinuousSpan(f"discontinuous span {offs!r}", lineno)
        nums = offs.split()
        if len(nums) != 2 or not all(x.isdigit() for x in nums):
            raise MalformedLine(f"bad offsets {offs!r}", lineno)
        start, end = int(nums[0]), int(nums[1])
        if byte_table is not None:
            if start not in byte_table or end not in byte_table:
                raise OffsetMismatch(f"byte offsets {start}-{end} split a character", lineno)
            start, end = byte_table[start], byte_table[end]
        if not 0 <= start < end <= len(txt_text):
            raise OffsetMismatch(f"span {start}-{end} outside text of length {len(txt_text)}", lineno)
        actual = txt_text[start:end]
        if actual != surface and _WS_RE.sub(" ", actual) != _WS_RE.sub(" ", surface):
            raise OffsetMismatch(f"surface {surface!r} != text slice {actual!r}", lineno)
        if boundaries == "strict" and (_mid_word(txt_text, start) or _mid_word(txt_text, end)):
            raise OffsetMismatch(f"span {start}-{end} ({surface!r}) cuts through a word", lineno)
        mentions.append(Mention(start, end, etype))
    return Document(doc_id, txt_text, tuple(mentions))


def write_brat(doc: Document) -> tuple[str, str]:
    lines = []
    for i, m in enumerate(doc.mentions, start=1):
        surface = _WS_RE.sub(" ", m.surface)
        lines.append(f"T{i}\t{m.entity_type} {m.start} {m.end}\t{surface}\n")
    return "".join(lines), doc.text


def _read_text(path: Path) -> str:
    # newline="" keeps \r\n so character offsets match the file
    with open(path, encoding="utf-8", newline="") as f:
        return f.read()


def read_brat_dir(
    path: PathLike, split_name: Optional[str] = None, offsets: str = "char", boundaries: str = "strict"
) -> Corpus:
    """Read every ``*.txt`` with a sibling ``*.ann`` under ``path`` (recursively)."""
    root = Path(path)
    docs = []
    for txt in sorted(root.rglob("*.txt")):
        ann = txt.with_suffix(".ann")
        if not ann.exists():
            log.warning("skipping %s: no .ann file", txt)
            continue
        doc_id = txt.relative_to(root).with_suffix("").as_posix()
        try:
            docs.append(parse_brat(_read_text(ann), _read_text(txt), doc_id, offsets, boundaries))
        except ParseError as exc:
            raise type(exc)(f"{ann}: {exc}") from exc
    return Corpus(split_name or root.name, docs)


def write_brat_dir(corpus: Corpus, path: PathLike) -> None:
    root = Path(path)
    for doc in corpus:
        ann, txt = write_brat(doc)
        target = root / doc.doc_id
        target.parent.mkdir(parents=True, exist_ok=True)
        with open(target.with_suffix(".txt"), "w", encoding="utf-8", newline="") as f:
            f.write(txt)
        with open(target.with_suffix(".ann"), "w", encoding="utf-8", newline="") as f:
            f.write(ann)


def document_to_dict(doc: Document) -> dict:
    obj = {
        "doc_id": doc.doc_id,
        "text": doc.text,
        "mentions": [[m.start, m.end, m.entity_type] for m in doc.mentions],
    }
    if doc.tokens is not None:
        obj["tokens"] = [list(t) for t in doc.tokens]
    if doc.sentences is not None:
        obj["sentences"] = [list(s) for s in doc.sentences]
    if doc.dep_roots is not None:
        obj["dep_roots"] = [[s, e, i] for (s, e), i in sorted(doc.dep_roots.items())]
    return obj


def document_from_dict(obj: dict) -> Document:
    mentions = []
    for item in obj["mentions"]:
        if len(item) != 3:
            raise ValueError(f"mention must be [start, end, type], got {item!r}")
        mentions.append(Mention(int(item[0]), int(item[1]), str(item[2])))
    roots = obj.get("dep_roots")
    return Document(
        doc_id=str(obj["doc_id"]),
        text=obj["text"],
        mentions=tuple(mentions),
        tokens=tuple(map(tuple, obj["tokens"])) if obj.get("tokens") is not None else None,
        sentences=tuple(map(tuple, obj["sentences"])) if obj.get("sentences") is not None else None,
        dep_roots={(s, e): i for s, e, i in roots} if roots is not None else None,
    )


def dumps_document(doc: Document) -> str:
    return json.dumps(document_to_dict(doc), ensure_ascii=False)


def iter_jsonl(path: PathLike):
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                yield lineno, json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"{path}: invalid JSON: {exc.msg}", lineno) from exc


def read_jsonl(path: PathLike, split_name: Optional[str] = None) -> Corpus:
    """Read a corpus; an optional first-line ``{"__meta__": {...}}`` header is honoured."""
    meta: dict = {}
    docs = []
    for lineno, obj in iter_jsonl(path):
        if isinstance(obj, dict) and META_KEY in obj:
            if docs or meta:
                raise ParseError(f"{path}: metadata header must be the first line", lineno)
            meta = dict(obj[META_KEY])
            continue
        try:
            docs.append(document_from_dict(obj))
        except (KeyError, TypeError, ValueError, InvalidDocument) as exc:
            raise ParseError(f"{path}: bad document: {exc}", lineno) from exc
    split = split_name or meta.pop("split", None) or Path(path).stem
    meta.pop("split", None)
    inventory = tuple(meta.pop("type_inventory", ()))
    return Corpus(split, docs, inventory, meta)


def write_jsonl(corpus: Corpus, path: PathLike, header: bool = True, extra_meta: Optional[dict] = None) -> None:
    """Write documents sorted by ``doc_id``; the header line carries split, inventory and metadata."""
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for line in _jsonl_lines(corpus, header, extra_meta):
            f.write(line + "\n")


def _jsonl_lines(corpus: Corpus, header: bool, extra_meta: Optional[dict]) -> Iterable[str]:
    if header:
        meta = {"split": corpus.split_name, "type_inventory": list(corpus.type_inventory)}
        meta.update(corpus.metadata)
        if extra_meta:
            meta.update(extra_meta)
        yield json.dumps({META_KEY: meta}, ensure_ascii=False)
    for doc in sorted(corpus, key=lambda d: d.doc_id):
        yield dumps_document(doc)


def dumps_corpus(corpus: Corpus, header: bool = True, extra_meta: Optional[dict] = None) -> str:
    """The exact text ``write_jsonl`` would write."""
    return "".join(line + "\n" for line in _jsonl_lines(corpus, header, extra_meta))
