from __future__ import annotations

import pytest

from conftest import doc
from nestweak.conllu import align_tokens, attach_dependencies, parse_conllu, read_conllu
from nestweak.corpus import Corpus
from nestweak.corruption import CorruptionConfig, corrupt_document
from nestweak.errors import ParseError

# "Bank of Russia" with "Bank" as the syntactic head of the mention
CONLLU = """\
# newdoc id = d
# sent_id = 1
1\tThe\tthe\tDET\t_\t_\t2\tdet\t_\t_
2\tBank\tbank\tNOUN\t_\t_\t5\tnsubj\t_\t_
3\tof\tof\tADP\t_\t_\t4\tcase\t_\t_
4\tRussia\tRussia\tPROPN\t_\t_\t2\tnmod\t_\t_
5\tagreed\tagree\tVERB\t_\t_\t0\troot\t_\tSpaceAfter=No
6\t.\t.\tPUNCT\t_\t_\t5\tpunct\t_\t_

# sent_id = 2
1-2\tIt's\t_\t_\t_\t_\t_\t_\t_\t_
1\tIt\tit\tPRON\t_\t_\t2\tnsubj\t_\t_
2\t's\tbe\tAUX\t_\t_\t0\troot\t_\t_
3\tdone\tdo\tVERB\t_\t_\t2\txcomp\t_\t_
"""
TEXT = "The Bank of Russia agreed. It's done."


def test_parse_groups_by_document():
    docs = parse_conllu(CONLLU)
    assert list(docs) == ["d"]
    s1, s2 = docs["d"]
    assert [t.form for t in s1.tokens] == ["The", "Bank", "of", "Russia", "agreed", "."]
    assert [t.form for t in s2.tokens] == ["It", "'s", "done"]  # range line skipped
    assert s1.metadata["sent_id"] == "1"


def test_align_document_level_heads():
    spans, heads = align_tokens(TEXT, parse_conllu(CONLLU)["d"])
    assert spans[1] == (4, 8) and spans[6] == (27, 29)
    assert heads[:6] == [1, 4, 3, 1, -1, 4]
    assert heads[6:] == [7, -1, 7]


def test_alignment_failure():
    with pytest.raises(ParseError):
        align_tokens("Something else entirely.", parse_conllu(CONLLU)["d"])


def test_bad_column_count():
    with pytest.raises(ParseError) as err:
        parse_conllu("1\tThe\tthe\n")
    assert err.value.line == 1


def test_attach_roots_and_syntax_position(tmp_path):
    path = tmp_path / "x.conllu"
    path.write_text(CONLLU, encoding="utf-8")
    c = Corpus("t", [doc(TEXT, ("Bank of Russia", "ORGANIZATION")), doc("other", doc_id="e")])
    out = attach_dependencies(c, read_conllu(path))
    d = out.get("d")
    assert d.dep_roots == {(4, 18): 1}
    assert out.get("e").dep_roots is None
    rec = corrupt_document(d, CorruptionConfig(position="syntax", script="latin"))
    (edit,) = rec.edits
    assert (edit.orig_start, edit.orig_end) == (4, 8)
    assert rec.document.text.endswith(" of Russia agreed. It's done.")
