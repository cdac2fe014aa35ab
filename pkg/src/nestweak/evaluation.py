"""Overall / inner / outer micro and macro scores for nested NER predictions.

Inner/outer status is decided separately on the gold side and on the
predicted side: an entity is inner when another entity of the same side
covers it (``start_j <= start_i`` and ``end_i <= end_j``). Taken literally,
two equal spans with different types cover each other, so both are inner;
``strict=True`` requires the covering span to differ instead.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable

from .corpus import Corpus, Mention
from .errors import DocMismatch

CATEGORIES = ("overall", "inner", "outer")
Key = tuple[int, int, str]


def classify_inner_outer(entities: Iterable[Mention], strict: bool = False) -> tuple[set[Key], set[Key]]:
    """Split ``(start, end, type)`` keys into ``(inner, outer)``."""
    keys = sorted({(m.start, m.end, m.entity_type) for m in entities}, key=lambda k: (k[0], -k[1], k[2]))
    inner, outer = set(), set()
    # keys sorted by start asc, end desc: every potential container precedes its content
    # except equal-span keys, which are handled via the span multiplicity below
    span_count = Counter((s, e) for s, e, _ in keys)
    max_end = -1
    prev_span = None
    max_end_before_span = -1
    for s, e, t in keys:
        if (s, e) != prev_span:
            max_end_before_span = max_end
            prev_span = (s, e)
        covered = max_end_before_span >= e or (not strict and span_count[(s, e)] > 1)
        (inner if covered else outer).add((s, e, t))
        max_end = max(max_end, e)
    return inner, outer


def f1_score(p: float, r: float) -> float:
    return 2 * p * r / (p + r) if p + r > 0 else 0.0


@dataclass
class Counts:
    tp: int = 0
    fp: int = 0
    fn: int = 0

    def add(self, other: "Counts") -> None:
        self.tp += other.tp
        self.fp += other.fp
        self.fn += other.fn

    def prf(self, empty: float = 1.0) -> tuple[float, float, float]:
        """Precision, recall, F1; ``empty`` is returned for all three when nothing is gold or predicted."""
        n_pred, n_gold = self.tp + self.fp, self.tp + self.fn
        if n_pred == 0 and n_gold == 0:
            return empty, empty, empty
        p = self.tp / n_pred if n_pred else 0.0
        r = self.tp / n_gold if n_gold else 0.0
        return p, r, f1_score(p, r)


def match_counts(gold: set[Key], pred: set[Key]) -> Counts:
    tp = len(gold & pred)
    return Counts(tp, len(pred) - tp, len(gold) - tp)


@dataclass
class CategoryScore:
    micro: Counts = field(default_factory=Counts)
    macro_precision: float = 0.0
    macro_recall: float = 0.0
    macro_f1: float = 0.0
    empty_score: float = 1.0

    @property
    def precision(self) -> float:
        return self.micro.prf(self.empty_score)[0]

    @property
    def recall(self) -> float:
        return self.micro.prf(self.empty_score)[1]

    @property
    def f1(self) -> float:
        return self.micro.prf(self.empty_score)[2]

    def to_dict(self) -> dict:
        return {
            "tp": self.micro.tp,
            "fp": self.micro.fp,
            "fn": self.micro.fn,
            "micro_precision": self.precision,
            "micro_recall": self.recall,
            "micro_f1": self.f1,
            "macro_precision": self.macro_precision,
            "macro_recall": self.macro_recall,
            "macro_f1": self.macro_f1,
        }


@dataclass
class EvalReport:
    categories: dict[str, CategoryScore]
    per_type: dict[str, Counts]
    documents: int
    strict_containment: bool = False

    def __getitem__(self, category: str) -> CategoryScore:
        return self.categories[category]

    def to_dict(self) -> dict:
        out = {"documents": self.documents, "strict_containment": self.strict_containment}
        for cat in CATEGORIES:
            out[cat] = self.categories[cat].to_dict()
        out["per_type"] = {}
        for t, c in sorted(self.per_type.items()):
            p, r, f = c.prf(0.0)
            out["per_type"][t] = {"tp": c.tp, "fp": c.fp, "fn": c.fn, "precision": p, "recall": r, "f1": f}
        return out

    def format_text(self) -> str:
        lines = [
            f"documents: {self.documents}",
            f"{'category':<10}{'TP':>7}{'FP':>7}{'FN':>7}{'P':>8}{'R':>8}{'F1':>8}{'macroF1':>9}",
        ]
        for cat in CATEGORIES:
            s = self.categories[cat]
            lines.append(
                f"{cat:<10}{s.micro.tp:>7}{s.micro.fp:>7}{s.micro.fn:>7}"
                f"{100 * s.precision:>8.2f}{100 * s.recall:>8.2f}{100 * s.f1:>8.2f}{100 * s.macro_f1:>9.2f}"
            )
        lines.append("")
        lines.append(f"{'type':<20}{'TP':>7}{'FP':>7}{'FN':>7}{'F1':>8}")
        for t, c in sorted(self.per_type.items()):
            lines.append(f"{t:<20}{c.tp:>7}{c.fp:>7}{c.fn:>7}{100 * c.prf(0.0)[2]:>8.2f}")
        return "\n".join(lines)


def evaluate(gold: Corpus, pred: Corpus, strict: bool = False, empty_score: float = 1.0) -> EvalReport:
    """Exact ``(start, end, type)`` matching, per category, micro and macro.

    ``empty_score`` is the score a document (or the whole corpus, for micro)
    receives in a category where it has neither gold nor predicted entities.
    """
    gold_docs, pred_docs = gold.by_id(), pred.by_id()
    if set(gold_docs) != set(pred_docs):
        missing = sorted(set(gold_docs) ^ set(pred_docs))
        raise DocMismatch(f"gold and prediction documents differ: {missing[:5]}")

    cats = {c: CategoryScore(empty_score=empty_score) for c in CATEGORIES}
    macro_sums = {c: [0.0, 0.0, 0.0] for c in CATEGORIES}
    per_type: dict[str, Counts] = {}
    for doc_id in sorted(gold_docs):
        g_ments, p_ments = gold_docs[doc_id].mentions, pred_docs[doc_id].mentions
        g_all = {m.key for m in g_ments}
        p_all = {m.key for m in p_ments}
        g_inner, g_outer = classify_inner_outer(g_ments, strict)
        p_inner, p_outer = classify_inner_outer(p_ments, strict)
        sides = {"overall": (g_all, p_all), "inner": (g_inner, p_inner), "outer": (g_outer, p_outer)}
        for cat, (g, p) in sides.items():
            counts = match_counts(g, p)
            cats[cat].micro.add(counts)
            for i, v in enumerate(counts.prf(empty_score)):
                macro_sums[cat][i] += v
        for t in {k[2] for k in g_all | p_all}:
            c = match_counts({k for k in g_all if k[2] == t}, {k for k in p_all if k[2] == t})
            per_type.setdefault(t, Counts()).add(c)

    n = len(gold_docs)
    for cat in CATEGORIES:
        if n:
            cats[cat].macro_precision, cats[cat].macro_recall, cats[cat].macro_f1 = (
                v / n for v in macro_sums[cat]
            )
        else:
            cats[cat].macro_precision = cats[cat].macro_recall = cats[cat].macro_f1 = empty_score
    return EvalReport(cats, per_type, n, strict)
