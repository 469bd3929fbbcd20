"""Typed entity extraction from paragraph text.

Extractors are pluggable: the shipped baseline is a longest-match lexicon
tagger; an external-service client lets a trained NER model plug in behind
the same nine-type schema.
"""
from __future__ import annotations

import enum
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Protocol

import httpx

from .corpus import DocumentRecord, Paragraph

log = logging.getLogger(__name__)


class ExtractionError(Exception):
    """Raised for lexicon/extractor configuration problems."""


class EntityType(enum.IntEnum):
    """The nine entity classes, with stable codes in pole order."""

    dis = 0  # disease
    sym = 1  # clinical symptom
    dru = 2  # drug
    equ = 3  # medical equipment
    pro = 4  # medical procedure
    bod = 5  # body
    ite = 6  # medical examination item
    mic = 7  # microorganism
    dep = 8  # department

    @classmethod
    def parse(cls, token: str) -> "EntityType":
        try:
            return cls[token.strip().lower()]
        except KeyError:
            raise ExtractionError(f"unknown entity type: {token!r}") from None


def normalize_surface(surface: str) -> str:
    """Case-folded, whitespace-collapsed form used as entity identity."""
    return " ".join(surface.casefold().split())


@dataclass(frozen=True)
class EntityMention:
    surface: str
    start: int
    end: int
    etype: EntityType

    @property
    def normalized(self) -> str:
        return normalize_surface(self.surface)


@dataclass(frozen=True)
class EntitySet:
    """Deduplicated entities of one paragraph, with per-type counts."""

    id: str
    paragraph_id: str
    entities: tuple[tuple[str, EntityType], ...]
    counts_by_type: dict[EntityType, int]
    total: int

    def contains(self, normalized: str, etype: EntityType) -> bool:
        return (normalized, etype) in self.entities

    def entity_keys(self) -> set[tuple[str, EntityType]]:
        return set(self.entities)


class Extractor(Protocol):
    def __call__(self, text: str) -> list[EntityMention]: ...


@dataclass(frozen=True)
class Lexicon:
    entries: dict[str, EntityType]
    max_term_length: int

    @classmethod
    def from_entries(cls, entries: dict[str, EntityType]) -> "Lexicon":
        normalized: dict[str, EntityType] = {}
        for term, etype in entries.items():
            norm = normalize_surface(term)
            if not norm:
                raise ExtractionError("empty lexicon term")
            if norm in normalized and normalized[norm] != etype:
                raise ExtractionError(f"conflicting types for lexicon term {norm!r}")
            normalized[norm] = etype
        return cls(entries=normalized, max_term_length=max((len(t) for t in normalized), default=0))


def load_lexicon(path: str | Path) -> Lexicon:
    """Load a TSV lexicon (``term<TAB>type``).

    Duplicate terms with the same type are collapsed with a warning; a
    conflicting duplicate or an unknown type token is a load error.
    """
    entries: dict[str, EntityType] = {}
    with open(path, encoding="utf-8") as fh:
        for line_number, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n")
            if not line.strip() or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise ExtractionError(f"{path}:{line_number}: expected 'term<TAB>type'")
            term, type_token = parts
            norm = normalize_surface(term)
            if not norm:
                raise ExtractionError(f"{path}:{line_number}: empty term")
            try:
                etype = EntityType.parse(type_token)
            except ExtractionError as exc:
                raise ExtractionError(f"{path}:{line_number}: {exc}") from None
            if norm in entries:
                if entries[norm] != etype:
                    raise ExtractionError(
                        f"{path}:{line_number}: term {norm!r} already mapped to {entries[norm].name}"
                    )
                log.warning("lexicon %s:%d: duplicate term %r", path, line_number, norm)
                continue
            entries[norm] = etype
    return Lexicon.from_entries(entries)


def _is_word_char(ch: str) -> bool:
    # Only ASCII alphanumerics delimit words; CJK text has no word boundaries
    # and must stay matchable at any offset.
    return ("a" <= ch <= "z") or ("A" <= ch <= "Z") or ("0" <= ch <= "9")


class LexiconExtractor:
    """Deterministic dictionary tagger: longest match wins, left to right.

    Matches are case-folded and never overlap. For terms made of ASCII words
    a match must not sit inside a larger word.
    """

    def __init__(self, lexicon: Lexicon):
        self.lexicon = lexicon
        by_first: dict[str, set[int]] = {}
        for term in lexicon.entries:
            by_first.setdefault(term[0], set()).add(len(term))
        # Candidate match lengths per leading character, longest first.
        self._lengths_by_first = {ch: sorted(lengths, reverse=True) for ch, lengths in by_first.items()}

    def __call__(self, text: str) -> list[EntityMention]:
        folded = text.casefold()
        if len(folded) != len(text):
            # casefold may change length (e.g. ß); fall back to lowercase
            # which is length-stable for offset bookkeeping.
            folded = text.lower()
        mentions: list[EntityMention] = []
        n = len(text)
        i = 0
        while i < n:
            lengths = self._lengths_by_first.get(folded[i])
            if lengths:
                for length in lengths:
                    j = i + length
                    if j > n:
                        continue
                    candidate = folded[i:j]
                    etype = self.lexicon.entries.get(candidate)
                    if etype is None:
                        continue
                    if _is_word_char(candidate[0]) and i > 0 and _is_word_char(folded[i - 1]):
                        continue
                    if _is_word_char(candidate[-1]) and j < n and _is_word_char(folded[j]):
                        continue
                    mentions.append(EntityMention(surface=text[i:j], start=i, end=j, etype=etype))
                    i = j - 1
                    break
            i += 1
        return mentions


class ExternalExtractor:
    """Client for a user-supplied NER endpoint.

    Request: ``{"text": ...}``; response: ``[{"start":..,"end":..,"type":..}]``
    with types from the nine-class schema. This is where a fine-tuned model
    plugs in without living inside this package.
    """

    def __init__(self, endpoint: str, timeout: float = 30.0, client: httpx.Client | None = None):
        self.endpoint = endpoint
        self._client = client or httpx.Client(timeout=timeout)

    def __call__(self, text: str) -> list[EntityMention]:
        response = self._client.post(self.endpoint, json={"text": text})
        response.raise_for_status()
        payload = response.json()
        if not isinstance(payload, list):
            raise ExtractionError("NER endpoint returned a non-list payload")
        mentions = []
        for item in payload:
            start, end = int(item["start"]), int(item["end"])
            if not (0 <= start < end <= len(text)):
                raise ExtractionError(f"NER endpoint returned invalid span ({start}, {end})")
            mentions.append(
                EntityMention(surface=text[start:end], start=start, end=end, etype=EntityType.parse(item["type"]))
            )
        mentions.sort(key=lambda m: (m.start, m.end))
        return mentions


def extract_entities(text: str, extractor: Extractor) -> list[EntityMention]:
    """Mentions for one paragraph, sorted by offset.

    An extractor failure is recorded and yields an empty list rather than
    aborting the whole document.
    """
    if not text:
        raise ExtractionError("empty paragraph text")
    try:
        mentions = extractor(text)
    except Exception:
        log.exception("extractor failed on paragraph text")
        return []
    return sorted(mentions, key=lambda m: (m.start, m.end))


def build_entity_set(paragraph: Paragraph, mentions: Iterable[EntityMention]) -> EntitySet:
    """Collapse mentions to (normalized, type) identity and count per type."""
    seen: list[tuple[str, EntityType]] = []
    for m in mentions:
        key = (m.normalized, m.etype)
        if key not in seen:
            seen.append(key)
    counts: dict[EntityType, int] = {}
    for _, etype in seen:
        counts[etype] = counts.get(etype, 0) + 1
    return EntitySet(
        id=f"{paragraph.id}.es",
        paragraph_id=paragraph.id,
        entities=tuple(seen),
        counts_by_type=counts,
        total=len(seen),
    )


@dataclass(frozen=True)
class AnnotatedParagraph:
    paragraph_id: str
    text: str
    spans: tuple[EntityMention, ...]


@dataclass(frozen=True)
class AnnotatedDocument:
    document_id: str
    title: str
    paragraphs: tuple[AnnotatedParagraph, ...]

    def to_dict(self) -> dict:
        return {
            "document_id": self.document_id,
            "title": self.title,
            "paragraphs": [
                {
                    "paragraph_id": p.paragraph_id,
                    "text": p.text,
                    "spans": [
                        {"start": m.start, "end": m.end, "surface": m.surface, "type": m.etype.name}
                        for m in p.spans
                    ],
                }
                for p in self.paragraphs
            ],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "AnnotatedDocument":
        return cls(
            document_id=data["document_id"],
            title=data["title"],
            paragraphs=tuple(
                AnnotatedParagraph(
                    paragraph_id=p["paragraph_id"],
                    text=p["text"],
                    spans=tuple(
                        EntityMention(
                            surface=s["surface"],
                            start=s["start"],
                            end=s["end"],
                            etype=EntityType.parse(s["type"]),
                        )
                        for s in p["spans"]
                    ),
                )
                for p in data["paragraphs"]
            ),
        )


def annotate_document(
    doc: DocumentRecord,
    paragraphs: Iterable[Paragraph],
    mentions_by_paragraph: dict[str, list[EntityMention]],
) -> AnnotatedDocument:
    """Attach mention spans to each paragraph for the original-text view."""
    annotated = []
    for p in sorted(paragraphs, key=lambda p: p.index):
        spans = tuple(sorted(mentions_by_paragraph.get(p.id, []), key=lambda m: (m.start, m.end)))
        for m in spans:
            if not (0 <= m.start < m.end <= len(p.text)) or p.text[m.start : m.end] != m.surface:
                raise ExtractionError(f"span does not slice paragraph {p.id}: {m}")
        annotated.append(AnnotatedParagraph(paragraph_id=p.id, text=p.text, spans=spans))
    return AnnotatedDocument(document_id=doc.id, title=doc.title, paragraphs=tuple(annotated))
