from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import doc, ministry_doc, nested_corpora
from nestweak.corpus import Corpus, Document, Mention, flatten
from nestweak.errors import NotFlat
from nestweak.inclusions import build_surface_index, extract_inclusions
from nestweak.lemmas import LemmaDictionary
from nestweak.neutralization import (
    NEGATIVE,
    NEUTRAL,
    POSITIVE,
    FlipStats,
    SpanLabel,
    enumerate_spans,
    export_span_labels,
    format_span_labels,
    neutralize_corpus,
    overlength_mentions,
    partition_spans,
    read_span_labels,
    weight_summary,
    with_inclusion_positives,
)


def by_surface(d: Document, labels):
    """Label of the first span with each surface."""
    out = {}
    for l in labels:
        out.setdefault(d.text[l.start:l.end], l)
    return out


def ministry_labels(mode="content_aware"):
    d = ministry_doc()
    c = Corpus("t", [d])
    return d, partition_spans(d, enumerate_spans(d), build_surface_index(c), mode)


def test_span_counts():
    d = Document("d", "Bank of Russia")
    assert len(enumerate_spans(d, 3)) == 6
    assert len(enumerate_spans(d, 1)) == 3


@settings(max_examples=100)
@given(st.integers(1, 25), st.integers(1, 30))
def test_span_count_closed_form(n, max_len):
    d = Document("d", " ".join(["w"] * n))
    expected = sum(n - k + 1 for k in range(1, min(max_len, n) + 1))
    assert len(enumerate_spans(d, max_len)) == expected


def test_spans_stay_within_sentences():
    d = Document("d", "Bank of Russia. Moscow city.", sentences=((0, 15), (16, 28)))
    spans = enumerate_spans(d, 10)
    assert len(spans) == 6 + 3
    assert not any(c.start < 15 < c.end for c in spans)


def test_ministry_partition():
    d, labels = ministry_labels()
    lab = by_surface(d, labels)
    assert lab["Min. of Foreign Affairs of Russia"].label == POSITIVE
    assert lab["Min. of Foreign Affairs of Russia"].pos_type == "ORGANIZATION"
    assert lab["Russia"].label == NEUTRAL
    assert lab["Russia"].reason == "Russia"
    assert lab["of Foreign"].label == NEGATIVE
    assert lab["Affairs of"].label == NEGATIVE


def test_ministry_geometric_neutralizes_everything_inside():
    d, labels = ministry_labels("geometric")
    lab = by_surface(d, labels)
    assert lab["of Foreign"].label == NEUTRAL and lab["of Foreign"].reason == "within-entity"
    assert lab["Min. of Foreign Affairs of Russia"].label == POSITIVE


def test_non_token_aligned_mention_still_positive():
    # "Min." ends with a period: its candidate span is "Min"; the mention keeps its own span
    d = doc("The Min. said", ("Min.", "ORG"))
    labels = partition_spans(d, enumerate_spans(d), None, "geometric")
    pos = [l for l in labels if l.label == POSITIVE]
    assert [(l.start, l.end) for l in pos] == [(4, 8)]
    assert by_surface(d, labels)["Min"].label == NEUTRAL


def test_no_mentions_all_negative():
    d = Document("d", "nothing to see here")
    labels = partition_spans(d, enumerate_spans(d), build_surface_index(Corpus("t", [d])))
    assert {l.label for l in labels} == {NEGATIVE}


def test_equal_spans_with_two_types():
    d = doc("Moscow", (0, 6, "CITY"), (0, 6, "LOCATION"))
    labels = partition_spans(d, enumerate_spans(d), None, "geometric")
    assert sorted(l.pos_type for l in labels) == ["CITY", "LOCATION"]


def test_nested_input_rejected():
    d = doc("Bank of Russia", (0, 14, "ORG"), (8, 14, "COUNTRY"))
    with pytest.raises(NotFlat):
        partition_spans(d, enumerate_spans(d), None, "geometric")


def test_content_mode_needs_index():
    with pytest.raises(ValueError):
        partition_spans(Document("d", "x"), [], None, "content_aware")


def test_lemmatized_neutral_matching():
    lem = LemmaDictionary({"россии": "россия"})
    d1 = doc("Министерство России", (0, 19, "ORG"), doc_id="a")
    d2 = doc("Россия", (0, 6, "COUNTRY"), doc_id="b")
    index = build_surface_index(Corpus("t", [d1, d2]), lem)
    exact = by_surface(d1, partition_spans(d1, enumerate_spans(d1), index, match="exact"))
    lemma = by_surface(d1, partition_spans(d1, enumerate_spans(d1), index, match="lemmatized"))
    assert exact["России"].label == NEGATIVE
    assert lemma["России"].label == NEUTRAL and lemma["России"].reason == "россия"


def test_overlength_mentions_reported_not_dropped_silently(caplog):
    text = " ".join(f"w{i}" for i in range(5))
    d = doc(text, (0, len(text), "LONG"))
    assert overlength_mentions(d, 3) == list(d.mentions)
    with caplog.at_level("WARNING"):
        labels = partition_spans(d, enumerate_spans(d, 3), None, "geometric", max_len_tokens=3)
    assert not any(l.label == POSITIVE for l in labels)
    assert "spans 5 tokens" in caplog.text


def test_ministry_with_inclusion_positive():
    d, labels = ministry_labels()
    c = Corpus("t", [d])
    inc = extract_inclusions(c, build_surface_index(c))
    added = [(d.doc_id, m) for m in inc.documents[0].mentions if m not in d.mentions]
    stats = FlipStats()
    flipped = with_inclusion_positives(labels, added, stats)
    lab = by_surface(d, flipped)
    assert lab["Russia"].label == POSITIVE and lab["Russia"].pos_type == "COUNTRY"
    assert lab["Russia"].reason == "inclusion"
    assert (stats.from_neutral, stats.from_negative) == (1, 0)
    assert with_inclusion_positives(labels, []) == labels


def test_conflicting_inclusion_kept_as_second_record():
    d = doc("Moscow", (0, 6, "CITY"))
    labels = partition_spans(d, enumerate_spans(d), None, "geometric")
    stats = FlipStats()
    out = with_inclusion_positives(labels, [("d", Mention(0, 6, "LOCATION"))], stats)
    assert [(l.pos_type, l.reason) for l in out] == [("CITY", None), ("LOCATION", "conflict")]
    assert stats.conflicts == 1


def test_export_format_and_round_trip(tmp_path):
    d, labels = ministry_labels()
    path = tmp_path / "labels.tsv"
    export_span_labels(labels, path, header="run 1")
    text = path.read_text(encoding="utf-8")
    assert text.startswith("# run 1\n")
    row = next(l for l in text.splitlines() if "\tNeutral\t" in l)
    assert row.split("\t")[3:] == ["Neutral", "-", "Russia"]
    back = read_span_labels(path)
    assert [(l.key, l.label, l.pos_type, l.reason) for l in back] == [
        (l.key, l.label, l.pos_type, l.reason) for l in labels
    ]
    assert format_span_labels(labels) == format_span_labels(list(reversed(labels)))


def test_reason_escaping_round_trip(tmp_path):
    lab = [SpanLabel("d", 0, 3, 1, NEUTRAL, None, "a\tb\\c\nd")]
    export_span_labels(lab, tmp_path / "x.tsv")
    assert read_span_labels(tmp_path / "x.tsv")[0].reason == "a\tb\\c\nd"


def test_weights():
    d, labels = ministry_labels()
    summary = weight_summary(labels)
    assert summary["weighted"] == summary[POSITIVE] + summary[NEGATIVE]
    assert all(l.weight == (0 if l.label == NEUTRAL else 1) for l in labels)


@settings(max_examples=200, deadline=None)
@given(nested_corpora())
def test_partition_properties(corpus):
    flat = flatten(corpus)
    index = build_surface_index(flat)
    content = neutralize_corpus(flat, index, "content_aware")
    geometric = neutralize_corpus(flat, index, "geometric")
    for labels in (content, geometric):
        # one label per candidate key, except equal spans carrying two positive types
        per_key = {}
        for l in labels:
            per_key.setdefault(l.key, set()).add(l.label)
        assert all(len(v) == 1 for v in per_key.values())
        cands = {(d.doc_id, c.start, c.end) for d in flat for c in enumerate_spans(d)}
        assert cands <= set(per_key)
        for d in flat:
            for m in d.mentions:
                assert POSITIVE in per_key[(d.doc_id, m.start, m.end)]
    for l in content:
        if l.label == NEUTRAL:
            assert l.reason in index.exact
    neutral_c = {l.key for l in content if l.label == NEUTRAL}
    neutral_g = {l.key for l in geometric if l.label == NEUTRAL}
    assert neutral_c <= neutral_g
    # flips equal the inclusions that land on neutral spans
    inc = extract_inclusions(flat, index)
    pairs = [(d.doc_id, m) for d, f in zip(inc, flat) for m in d.mentions if m not in f.mentions]
    stats = FlipStats()
    with_inclusion_positives(content, pairs, stats)
    assert stats.from_neutral == len({(d, m.start, m.end) for d, m in pairs} & neutral_c)
