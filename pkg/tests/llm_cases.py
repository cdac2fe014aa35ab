"""Canned LLM answers with the predictions and discards each must yield."""

from __future__ import annotations

from dataclasses import dataclass, field


@dataclass(frozen=True)
class ParseCase:
    name: str
    raw: str
    source: str
    entities: tuple = ()  # (start, end, type)
    discards: tuple = ()  # (reason, surface)
    failed: bool = False
    out_of_inventory: tuple = ()
    occurrence: str = "first"


SOURCE = "Russia won. Moscow is in Russia."

PARSE_CASES = (
    ParseCase(
        "valid_fenced_json",
        '```{"Russia": "COUNTRY"}```',
        "Russia won.",
        entities=((0, 6, "COUNTRY"),),
    ),
    ParseCase(
        "missing_fence",
        '{"Russia": "COUNTRY"}',
        "Russia won.",
        failed=True,
    ),
    ParseCase(
        "malformed_object",
        '```{"Russia": "COUNTRY"```',
        "Russia won.",
        failed=True,
    ),
    ParseCase(
        "non_occurring_surface",
        '```{"Mars": "LOCATION", "Moscow": "CITY"}```',
        SOURCE,
        entities=((12, 18, "CITY"),),
        discards=(("not_in_source", "Mars"),),
    ),
    ParseCase(
        "out_of_inventory_type",
        '```{"Moscow": "PLANET"}```',
        SOURCE,
        entities=((12, 18, "PLANET"),),
        out_of_inventory=((12, 18, "PLANET"),),
    ),
    ParseCase(
        "unicode_surfaces",
        '```{"Министерство иностранных дел России": "ORGANIZATION", "России": "COUNTRY"}```',
        "Министерство иностранных дел России заявило.",
        entities=((0, 35, "ORGANIZATION"), (29, 35, "COUNTRY")),
    ),
    ParseCase(
        "reasoning_and_language_tag",
        '<think>maybe ```{"won": "EVENT"}```</think>\nAnswer:\n```json\n{"Russia": "COUNTRY"}\n```',
        "Russia won.",
        entities=((0, 6, "COUNTRY"),),
    ),
    ParseCase(
        "trailing_comma",
        '```{"Moscow": "CITY", "Russia": "COUNTRY",}```',
        SOURCE,
        entities=((0, 6, "COUNTRY"), (12, 18, "CITY")),
    ),
    ParseCase(
        "non_object_json",
        '```["Russia", "COUNTRY"]```',
        "Russia won.",
        failed=True,
    ),
    ParseCase(
        "all_occurrences_and_bad_values",
        '```[{"Russia": "COUNTRY"}, {"Moscow": 7}, {"  ": "CITY"}]```',
        SOURCE,
        entities=((0, 6, "COUNTRY"), (25, 31, "COUNTRY")),
        discards=(("invalid_value", "Moscow"), ("empty", "")),
        occurrence="all",
    ),
)


def check_case(case: ParseCase, parse_response) -> list[str]:
    """Mismatches between ``parse_response`` output and the case's expectations."""
    got = parse_response(case.raw, case.source, case.occurrence)
    problems = []
    ents = tuple(m.key for m in got.entities)
    if ents != case.entities:
        problems.append(f"entities {ents} != {case.entities}")
    for m in got.entities:
        if case.source[m.start:m.end] != m.surface:
            problems.append(f"{m.key} does not occur at its offsets")
    disc = tuple((d.reason, d.surface) for d in got.discards)
    if disc != case.discards:
        problems.append(f"discards {disc} != {case.discards}")
    if got.parse_failed != case.failed:
        problems.append(f"parse_failed={got.parse_failed}, expected {case.failed}")
    ooi = tuple(m.key for m in got.out_of_inventory)
    if ooi != case.out_of_inventory:
        problems.append(f"out_of_inventory {ooi} != {case.out_of_inventory}")
    return problems
