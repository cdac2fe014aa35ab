from __future__ import annotations

from collections import Counter

import pytest
from hypothesis import given, settings

from conftest import doc, ministry_doc, nested_corpora
from nestweak.corpus import Corpus, Document, flatten
from nestweak.errors import DocMismatch, NotFlat
from nestweak.inclusions import (
    build_surface_index,
    extract_inclusions,
    resolve_type,
    score_inclusions,
)
from nestweak.lemmas import LemmaDictionary, canonical_form


def keys(d):
    return sorted(m.key for m in d.mentions)


def test_canonical_form_examples():
    assert canonical_form("России", LemmaDictionary({"россии": "россия"})) == "россия"
    assert canonical_form("Russia") == "russia"
    lem = LemmaDictionary({"иностранных": "иностранный", "дел": "дело"})
    assert canonical_form("Иностранных Дел", lem) == "дело иностранный"


def test_lemma_dictionary_file_round_trip(tmp_path):
    p = tmp_path / "lemmas.tsv"
    p.write_text("# comment\nРоссии\tРоссия\nдел\tдело\n", encoding="utf-8")
    lem = LemmaDictionary.load(p)
    assert lem.lemma("РОССИИ") == "россия"
    assert lem.lemma("unknown") == "unknown"
    lem.save(tmp_path / "out.tsv")
    assert LemmaDictionary.load(tmp_path / "out.tsv").entries == lem.entries


def test_lemma_dictionary_rejects_empty_lemma():
    with pytest.raises(ValueError):
        LemmaDictionary({"x": ""})


def test_index_single_mention():
    idx = build_surface_index(Corpus("t", [doc("Russia", ("Russia", "COUNTRY"))]))
    assert idx.exact == {"Russia": Counter({"COUNTRY": 1})}


def test_index_keeps_ambiguous_types_and_resolves_by_frequency():
    c = Corpus("t", [
        doc("Georgia", ("Georgia", "COUNTRY"), doc_id="a"),
        doc("Georgia", ("Georgia", "STATE"), doc_id="b"),
        doc("Georgia", ("Georgia", "COUNTRY"), doc_id="c"),
    ])
    idx = build_surface_index(c)
    assert idx.exact["Georgia"] == Counter({"COUNTRY": 2, "STATE": 1})
    assert idx.exact_type("Georgia") == "COUNTRY"
    assert resolve_type(Counter({"B": 1, "A": 1})) == "A"


def test_ministry_inclusion_added_as_inner():
    d = ministry_doc()
    c = Corpus("t", [d])
    out = extract_inclusions(c, build_surface_index(c), "exact")
    org = d.mentions[0]
    added = set(out.documents[0].mentions) - set(d.mentions)
    assert [(m.surface, m.entity_type) for m in added] == [("Russia", "COUNTRY")]
    assert all(org.strictly_contains(m) for m in added)
    assert out.metadata["inclusions"]["added"] == 1
    assert out.metadata["inclusions"]["assumptions"]


def test_single_mention_corpus_adds_nothing():
    c = Corpus("t", [doc("Ministry of Foreign Affairs", (0, 27, "ORG"))])
    out = extract_inclusions(c, build_surface_index(c))
    assert out.documents == c.documents


def test_exact_matching_respects_token_boundaries():
    c = Corpus("t", [doc("USAID and USA", ("USAID", "ORG"), (10, 13, "COUNTRY"))])
    assert extract_inclusions(c, build_surface_index(c)).documents == c.documents


def test_all_positions_are_found():
    c = Corpus("t", [
        doc("Paris to Paris line", (0, 19, "ROUTE"), doc_id="a"),
        doc("Paris", ("Paris", "CITY"), doc_id="b"),
    ])
    out = extract_inclusions(c, build_surface_index(c)).get("a")
    assert keys(out) == [(0, 5, "CITY"), (0, 19, "ROUTE"), (9, 14, "CITY")]


def test_lemmatized_mode_matches_inflections():
    lem = LemmaDictionary({"россии": "россия", "иностранных": "иностранный", "дел": "дело"})
    c = Corpus("t", [
        doc("Министерство иностранных дел России", (0, 35, "ORGANIZATION"), doc_id="a"),
        doc("Россия", ("Россия", "COUNTRY"), doc_id="b"),
    ])
    idx = build_surface_index(c, lem)
    assert extract_inclusions(c, idx, "exact").documents == c.documents
    out = extract_inclusions(c, idx, "lemmatized").get("a")
    assert [(m.surface, m.entity_type) for m in out.mentions if m.entity_type == "COUNTRY"] == [("России", "COUNTRY")]


def test_nested_input_rejected():
    with pytest.raises(NotFlat):
        c = Corpus("t", [doc("Bank of Russia", (0, 14, "ORG"), (8, 14, "COUNTRY"))])
        extract_inclusions(c, build_surface_index(c))


def test_score_perfect_and_disjoint():
    gold = Corpus("t", [doc("Bank of Russia", (0, 14, "ORG"), (8, 14, "COUNTRY"))])
    rep = score_inclusions(gold, gold)
    assert (rep.overall.precision, rep.overall.recall, rep.overall.type_accuracy) == (1.0, 1.0, 1.0)
    pseudo = Corpus("t", [doc("Bank of Russia", (0, 14, "ORG"), (0, 4, "ORG"))])
    rep = score_inclusions(pseudo, gold)
    assert (rep.overall.candidates, rep.overall.precision, rep.overall.recall) == (1, 0.0, 0.0)


def test_score_type_accuracy():
    gold = Corpus("t", [doc("Bank of Russia", (0, 14, "ORG"), (8, 14, "COUNTRY"))])
    pseudo = Corpus("t", [doc("Bank of Russia", (0, 14, "ORG"), (8, 14, "LOCATION"))])
    s = score_inclusions(pseudo, gold).overall
    assert (s.candidates, s.span_matches, s.span_and_type_matches) == (1, 1, 0)
    assert s.type_accuracy == 0.0
    assert s.to_dict()["precision"] == 0.0


def test_score_requires_same_documents():
    with pytest.raises(DocMismatch):
        score_inclusions(Corpus("t", [Document("a", "x")]), Corpus("t", [Document("b", "x")]))


def test_report_lists_reference_totals():
    gold = Corpus("t", [doc("Bank of Russia", (0, 14, "ORG"), (8, 14, "COUNTRY"))])
    rep = score_inclusions(gold, gold)
    assert "6458" in rep.format_text() and "6481" in rep.format_text()
    assert rep.to_dict()["per_type"]["COUNTRY"]["gold_inner"] == 1


@settings(max_examples=200, deadline=None)
@given(nested_corpora())
def test_inclusion_invariants(corpus):
    flat = flatten(corpus)
    idx = build_surface_index(flat)
    exact = extract_inclusions(flat, idx, "exact")
    lemma = extract_inclusions(flat, idx, "lemmatized")
    for before, after_e, after_l in zip(flat, exact, lemma):
        assert set(before.mentions) <= set(after_e.mentions)
        added = set(after_e.mentions) - set(before.mentions)
        for m in added:
            assert any(f.strictly_contains(m) for f in before.mentions)
            assert m.surface in idx.exact
        exact_spans = {m.span for m in added}
        lemma_spans = {m.span for m in set(after_l.mentions) - set(before.mentions)}
        assert exact_spans <= lemma_spans
    # X against itself: every non-outer mention is a correct candidate
    own = score_inclusions(corpus, corpus).overall
    assert own.span_and_type_matches == own.candidates
