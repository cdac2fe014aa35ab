"""Word tokenization and a light sentence splitter.

Tokens are maximal runs of letters and digits; everything else separates
them. Offsets are character offsets into the original string.
"""

from __future__ import annotations

import re
from typing import Iterable, Sequence

Span = tuple[int, int]

_WORD_RE = re.compile(r"[^\W_]+")
# terminal punctuation followed by whitespace, or a line break
_SENT_BREAK_RE = re.compile(r"(?<=[.!?…])\s+|\n+")


def tokenize(text: str, offset: int = 0) -> list[Span]:
    return [(m.start() + offset, m.end() + offset) for m in _WORD_RE.finditer(text)]


def token_strings(text: str) -> list[str]:
    return _WORD_RE.findall(text)


def tokens_in(tokens: Sequence[Span], start: int, end: int) -> list[int]:
    """Indices of the tokens lying fully inside ``[start, end)``."""
    return [i for i, (s, e) in enumerate(tokens) if s >= start and e <= end]


def split_sentences(text: str, protect: Iterable[Span] = ()) -> list[Span]:
    """Split on line breaks and on ``. ! ?`` followed by whitespace.

    A break is never placed strictly inside a protected span (usually the
    document's mentions), so ``"Min. of Foreign Affairs"`` survives intact
    when it is annotated. Returned spans are stripped of surrounding
    whitespace; empty sentences are dropped.
    """
    protected = sorted(protect)
    breaks = []
    for m in _SENT_BREAK_RE.finditer(text):
        if any(s < m.start() < e for s, e in protected):
            continue
        breaks.append((m.start(), m.end()))

    spans = []
    cursor = 0
    for b_start, b_end in breaks + [(len(text), len(text))]:
        seg_start, seg_end = cursor, b_start
        while seg_start < seg_end and text[seg_start].isspace():
            seg_start += 1
        while seg_end > seg_start and text[seg_end - 1].isspace():
            seg_end -= 1
        if seg_start < seg_end:
            spans.append((seg_start, seg_end))
        cursor = b_end
    return spans


def detect_script(text: str) -> str:
    """``"cyrillic"`` when Cyrillic letters outnumber Latin ones, else ``"latin"``."""
    cyr = lat = 0
    for ch in text:
        if "Ѐ" <= ch <= "ӿ":
            cyr += 1
        elif ch.isascii() and ch.isalpha():
            lat += 1
    return "cyrillic" if cyr > lat else "latin"
