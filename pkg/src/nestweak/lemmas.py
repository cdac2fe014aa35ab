"""Dictionary-driven lemmatization and canonical forms of surface strings."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Union

from .errors import ParseError
from .text import token_strings


@dataclass
class LemmaDictionary:
    """Case-folded surface token -> lemma; unknown tokens map to themselves."""

    entries: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        cleaned = {}
        for surface, lemma in self.entries.items():
            if not lemma:
                raise ValueError(f"empty lemma for {surface!r}")
            cleaned[surface.casefold()] = lemma.casefold()
        self.entries = cleaned

    def __len__(self):
        return len(self.entries)

    def lemma(self, token: str) -> str:
        folded = token.casefold()
        return self.entries.get(folded, folded)

    @classmethod
    def from_mapping(cls, mapping: Mapping[str, str]) -> "LemmaDictionary":
        return cls(dict(mapping))

    @classmethod
    def load(cls, path: Union[str, Path]) -> "LemmaDictionary":
        """Read ``surface<TAB>lemma`` lines; ``#`` starts a comment line."""
        entries = {}
        with open(path, encoding="utf-8") as f:
            for lineno, line in enumerate(f, start=1):
                line = line.rstrip("\r\n")
                if not line.strip() or line.lstrip().startswith("#"):
                    continue
                parts = line.split("\t")
                if len(parts) != 2 or not parts[0] or not parts[1]:
                    raise ParseError(f"{path}: expected 'surface<TAB>lemma'", lineno)
                entries[parts[0]] = parts[1]
        return cls(entries)

    def save(self, path: Union[str, Path]) -> None:
        with open(path, "w", encoding="utf-8") as f:
            for surface, lemma in sorted(self.entries.items()):
                f.write(f"{surface}\t{lemma}\n")


EMPTY = LemmaDictionary()


def lemmatize_tokens(surface: str, lemmas: LemmaDictionary = EMPTY) -> list[str]:
    return [lemmas.lemma(tok) for tok in token_strings(surface)]


def canonical_form(surface: str, lemmas: LemmaDictionary = EMPTY) -> str:
    """Sorted, case-folded lemmas of the surface's tokens, space-joined."""
    return " ".join(sorted(lemmatize_tokens(surface, lemmas)))
