from __future__ import annotations

import json

import pytest

from medcosmos.corpus import ingest_corpus
from medcosmos.extraction import EntityType, EntitySet, Lexicon


@pytest.fixture(scope="session")
def small_docs() -> list[dict]:
    return [
        {
            "id": "doc-1",
            "title": "Routine follow-up",
            "body": "Patient reported mild tooth pain.\n\nNo fever was observed.",
        },
        {
            "id": "doc-2",
            "title": "Jaw lesion",
            "body": "Exposed bone in the facial area.\n\nCT confirmed osteonecrosis of the jaw.\n\nPus overflow noted.",
        },
        {
            "id": "doc-3",
            "title": "Gastric complaint",
            "body": "Helicobacter pylori found on gastroscopy.\n\nOmeprazole started.",
        },
    ]


@pytest.fixture(scope="session")
def small_snapshot(small_docs):
    lines = [json.dumps(d) for d in small_docs]
    return ingest_corpus(lines)


@pytest.fixture(scope="session")
def tiny_lexicon() -> Lexicon:
    return Lexicon.from_entries(
        {
            "osteonecrosis": EntityType.dis,
            "ct": EntityType.ite,
            "bone": EntityType.bod,
            "bone exposure": EntityType.sym,
            "pus": EntityType.sym,
            "tooth pain": EntityType.sym,
            "fever": EntityType.sym,
            "jaw": EntityType.bod,
            "helicobacter pylori": EntityType.mic,
            "gastroscopy": EntityType.pro,
            "omeprazole": EntityType.dru,
        }
    )


def make_entity_set(set_id: str, *entities: tuple[str, EntityType]) -> EntitySet:
    seen = []
    for key in entities:
        if key not in seen:
            seen.append(key)
    counts: dict[EntityType, int] = {}
    for _, etype in seen:
        counts[etype] = counts.get(etype, 0) + 1
    return EntitySet(
        id=set_id,
        paragraph_id=f"{set_id}.p",
        entities=tuple(seen),
        counts_by_type=counts,
        total=len(seen),
    )
