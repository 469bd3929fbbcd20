"""Deterministic synthetic corpus for demos, tests and benchmarks.

Documents are generated from a small clinical vocabulary organized by
entity type, grouped into themes so that topic assignment, similarity
edges and co-occurrence all have visible structure.
"""
from __future__ import annotations

import json
import random
from pathlib import Path

from .extraction import EntityType, Lexicon

VOCABULARY: dict[EntityType, tuple[str, ...]] = {
    EntityType.dis: (
        "osteonecrosis",
        "osteomyelitis",
        "oral candidiasis",
        "meningitis",
        "herpes zoster",
        "periodontitis",
        "pulpitis",
        "gastric ulcer",
        "hepatitis",
        "pneumonia",
    ),
    EntityType.sym: (
        "bone exposure",
        "pus overflow",
        "exudate",
        "fever",
        "unilateral headache",
        "gum swelling",
        "tooth pain",
        "nausea",
        "fatigue",
        "cough",
    ),
    EntityType.dru: (
        "zoledronic acid",
        "anrotinib",
        "amoxicillin",
        "ibuprofen",
        "nystatin",
        "acyclovir",
        "metronidazole",
        "omeprazole",
    ),
    EntityType.equ: (
        "dental drill",
        "panoramic film",
        "endoscope",
        "ventilator",
        "infusion pump",
        "scalpel",
    ),
    EntityType.pro: (
        "tooth extraction",
        "root canal therapy",
        "debridement",
        "biopsy",
        "lumbar puncture",
        "gastroscopy",
        "targeted therapy",
    ),
    EntityType.bod: (
        "jaw",
        "mandible",
        "gingiva",
        "oral mucosa",
        "stomach",
        "liver",
        "lung",
        "meninges",
        "skin",
        "bone",
    ),
    EntityType.ite: (
        "ct",
        "mri",
        "blood routine",
        "biopsy report",
        "bone density scan",
        "liver function test",
    ),
    EntityType.mic: (
        "candida albicans",
        "staphylococcus aureus",
        "varicella zoster virus",
        "helicobacter pylori",
        "streptococcus",
        "osteoclasts",
    ),
    EntityType.dep: (
        "stomatology",
        "oral surgery",
        "neurology",
        "gastroenterology",
        "infectious diseases",
        "radiology",
    ),
}

# Themes bias term choice so documents cluster into recognizable topics.
THEMES: tuple[tuple[str, dict[EntityType, tuple[int, ...]]], ...] = (
    (
        "jaw lesion after dental treatment",
        {
            EntityType.dis: (0, 1, 5),
            EntityType.sym: (0, 1, 2, 6),
            EntityType.dru: (0, 1, 2),
            EntityType.pro: (0, 2, 6),
            EntityType.bod: (0, 1, 9),
            EntityType.ite: (0, 4),
            EntityType.mic: (1, 5),
            EntityType.dep: (0, 1),
            EntityType.equ: (0, 1),
        },
    ),
    (
        "oral infection and mucosal disease",
        {
            EntityType.dis: (2, 5, 6),
            EntityType.sym: (5, 6, 3),
            EntityType.dru: (4, 6, 2),
            EntityType.pro: (1, 3),
            EntityType.bod: (2, 3, 9),
            EntityType.ite: (2, 3),
            EntityType.mic: (0, 4),
            EntityType.dep: (0, 5),
            EntityType.equ: (0, 5),
        },
    ),
    (
        "neurological infection workup",
        {
            EntityType.dis: (3, 4),
            EntityType.sym: (3, 4, 8),
            EntityType.dru: (5, 3),
            EntityType.pro: (4, 3),
            EntityType.bod: (7, 8),
            EntityType.ite: (1, 2),
            EntityType.mic: (2, 4),
            EntityType.dep: (2, 4),
            EntityType.equ: (3, 4),
        },
    ),
    (
        "digestive disorder management",
        {
            EntityType.dis: (7, 8),
            EntityType.sym: (7, 8, 9),
            EntityType.dru: (7, 2),
            EntityType.pro: (5, 3),
            EntityType.bod: (4, 5, 6),
            EntityType.ite: (5, 2),
            EntityType.mic: (3,),
            EntityType.dep: (3, 5),
            EntityType.equ: (2, 4),
        },
    ),
)

_SENTENCES = (
    "Patient presented with {sym} involving the {bod}.",
    "Examination by {dep} suggested {dis}.",
    "{ite} confirmed {dis} of the {bod}.",
    "Treatment with {dru} was started after {pro}.",
    "History includes {pro} and long-term use of {dru}.",
    "Culture identified {mic} in the {bod}.",
    "The {equ} was used during {pro}.",
    "Follow-up showed {sym} and persistent {sym2}.",
)


def demo_lexicon() -> Lexicon:
    entries = {term: etype for etype, terms in VOCABULARY.items() for term in terms}
    return Lexicon.from_entries(entries)


def write_lexicon_tsv(path: str | Path) -> Path:
    path = Path(path)
    lines = [f"{term}\t{etype.name}" for etype, terms in VOCABULARY.items() for term in terms]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def _pick(rng: random.Random, etype: EntityType, theme: dict[EntityType, tuple[int, ...]]) -> str:
    terms = VOCABULARY[etype]
    # Mostly theme terms, occasionally anything, so themes overlap a little.
    if rng.random() < 0.85 and theme.get(etype):
        return terms[rng.choice(theme[etype])]
    return terms[rng.randrange(len(terms))]


def generate_documents(count: int, seed: int = 7) -> list[dict[str, str]]:
    """Deterministic list of ``{"title", "body"}`` entries."""
    rng = random.Random(seed)
    docs = []
    for i in range(count):
        theme_name, theme = THEMES[rng.randrange(len(THEMES))]
        paragraphs = []
        for _ in range(rng.randint(2, 4)):
            sentences = []
            for _ in range(rng.randint(2, 3)):
                template = _SENTENCES[rng.randrange(len(_SENTENCES))]
                sentences.append(
                    template.format(
                        dis=_pick(rng, EntityType.dis, theme),
                        sym=_pick(rng, EntityType.sym, theme),
                        sym2=_pick(rng, EntityType.sym, theme),
                        dru=_pick(rng, EntityType.dru, theme),
                        equ=_pick(rng, EntityType.equ, theme),
                        pro=_pick(rng, EntityType.pro, theme),
                        bod=_pick(rng, EntityType.bod, theme),
                        ite=_pick(rng, EntityType.ite, theme).upper()
                        if rng.random() < 0.3
                        else _pick(rng, EntityType.ite, theme),
                        mic=_pick(rng, EntityType.mic, theme),
                        dep=_pick(rng, EntityType.dep, theme),
                    )
                )
            paragraphs.append(" ".join(sentences))
        title = f"Record {i + 1:04d}: {theme_name}"
        docs.append({"title": title, "body": "\n\n".join(paragraphs)})
    return docs


def write_demo_corpus(directory: str | Path, count: int = 1000, seed: int = 7) -> tuple[Path, Path]:
    """Write ``demo.jsonl`` and ``lexicon.tsv`` under ``directory``."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    corpus_path = directory / "demo.jsonl"
    with open(corpus_path, "w", encoding="utf-8") as fh:
        for doc in generate_documents(count, seed):
            fh.write(json.dumps(doc, sort_keys=True, ensure_ascii=False) + "\n")
    lexicon_path = write_lexicon_tsv(directory / "lexicon.tsv")
    return corpus_path, lexicon_path
