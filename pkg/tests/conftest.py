from __future__ import annotations

import os
from pathlib import Path

from hypothesis import strategies as st

from nestweak.corpus import Corpus, Document, Mention
from nestweak.text import tokenize

DATA = Path(__file__).parent / "data"
TYPES = ("ORG", "PER", "LOC", "COUNTRY", "CITY")
WORDS = ("Ministry", "of", "Foreign", "Affairs", "Russia", "Bank", "France", "city", "Moscow", "the", "new")


def nerel_dir():
    """Location of the NEREL distribution, or None when it is not available."""
    path = os.environ.get("NEREL_DIR")
    if path and Path(path).is_dir():
        return Path(path)
    return None


def doc(text: str, *mentions, doc_id: str = "d") -> Document:
    """Build a document from ``(surface_or_start, ..., type)`` tuples.

    ``("Russia", "COUNTRY")`` locates the first occurrence of the surface;
    ``(3, 9, "COUNTRY")`` is taken literally.
    """
    out = []
    for m in mentions:
        if len(m) == 2:
            start = text.index(m[0])
            out.append(Mention(start, start + len(m[0]), m[1]))
        else:
            out.append(Mention(*m))
    return Document(doc_id, text, tuple(out))


def ministry_doc() -> Document:
    text = "The Min. of Foreign Affairs of Russia said that Russia is ready."
    org = "Min. of Foreign Affairs of Russia"
    s = text.index(org)
    r = text.index("Russia", s + len(org))
    return Document("ministry", text, (Mention(s, s + len(org), "ORGANIZATION"), Mention(r, r + 6, "COUNTRY")))


@st.composite
def texts(draw, min_words=1, max_words=14):
    words = draw(st.lists(st.sampled_from(WORDS), min_size=min_words, max_size=max_words))
    seps = draw(st.lists(st.sampled_from([" ", " ", ", ", ". ", "\n"]), min_size=len(words), max_size=len(words)))
    return "".join(w + s for w, s in zip(words, seps)).rstrip()


@st.composite
def nested_documents(draw, doc_id="d", max_mentions=8, allow_crossing=False):
    """A text with token-aligned mentions forming a laminar (nested, non-crossing) family."""
    text = draw(texts())
    toks = tokenize(text)
    n = len(toks)
    mentions: list[Mention] = []
    for _ in range(draw(st.integers(0, max_mentions))):
        i = draw(st.integers(0, n - 1))
        j = draw(st.integers(i, min(n - 1, i + 5)))
        m = Mention(toks[i][0], toks[j][1], draw(st.sampled_from(TYPES)))
        crossing = any(
            m.overlaps(o) and not (m.contains(o) or o.contains(m)) for o in mentions
        )
        if crossing and not allow_crossing:
            continue
        mentions.append(m)
    return Document(doc_id, text, tuple(mentions))


@st.composite
def nested_corpora(draw, max_docs=4, max_mentions=8):
    n = draw(st.integers(1, max_docs))
    docs = [draw(nested_documents(doc_id=f"doc{i}", max_mentions=max_mentions)) for i in range(n)]
    return Corpus("train", docs)


# ---------------------------------------------------------------- acceptance reporting

_CRITERIA: dict[str, tuple[str, str]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(name): acceptance criterion reported in the run summary")


def pytest_runtest_logreport(report):
    marker = _criterion_names.get(report.nodeid)
    if marker is None:
        return
    if report.when == "call" or report.outcome != "passed":
        if report.skipped:
            reason = report.longrepr[2] if isinstance(report.longrepr, tuple) else str(report.longrepr)
            _CRITERIA[marker] = ("SKIP", reason.removeprefix("Skipped: "))
        elif report.failed:
            _CRITERIA[marker] = ("FAIL", report.longreprtext.strip().splitlines()[-1])
        elif report.when == "call":
            detail = "; ".join(str(v) for k, v in report.user_properties if k == "measured")
            _CRITERIA.setdefault(marker, ("PASS", detail))


_criterion_names: dict[str, str] = {}


def pytest_collection_modifyitems(items):
    for item in items:
        m = item.get_closest_marker("criterion")
        if m is not None:
            _criterion_names[item.nodeid] = m.args[0]


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(_CRITERIA):
        status, detail = _CRITERIA[name]
        line = f"{status} {name}"
        terminalreporter.write_line(f"{line}: {detail}" if detail else line)
