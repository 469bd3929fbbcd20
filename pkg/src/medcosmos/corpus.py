"""Document ingestion, segmentation, persistence and keyword search.

A corpus is an immutable snapshot of documents and their ordered paragraphs.
Ids are derived from content digests so that every downstream artifact is
reproducible across runs.
"""
from __future__ import annotations

import hashlib
import json
import logging
import re
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Sequence

log = logging.getLogger(__name__)


class CorpusError(Exception):
    """Raised for invalid corpus input or queries."""


# Section headers seen in clinical-record style documents ("Chief complaint: ...").
DEFAULT_SECTION_PATTERN = r"^[A-Z][A-Za-z0-9 /()'-]{0,60}:"

_BLANK_LINE_SEP = re.compile(r"(\n(?:[ \t]*\n)+)")


@dataclass(frozen=True)
class SegmentationRules:
    """How a document body is split into paragraphs.

    mode "blank_line" splits on runs of blank lines; mode "sections" starts a
    new paragraph at every line matching one of ``section_patterns``.
    """

    mode: str = "blank_line"
    section_patterns: tuple[str, ...] = (DEFAULT_SECTION_PATTERN,)

    def __post_init__(self) -> None:
        if self.mode not in ("blank_line", "sections"):
            raise CorpusError(f"unknown segmentation mode: {self.mode!r}")


@dataclass(frozen=True)
class Segmentation:
    """Paragraph texts plus the separators needed to reconstruct the body.

    ``separators`` has one more entry than ``paragraphs``: leading text,
    the text between consecutive paragraphs, and trailing text.
    """

    paragraphs: tuple[str, ...]
    separators: tuple[str, ...]
    whitespace_only: bool = False

    def rejoin(self) -> str:
        parts = [self.separators[0]]
        for text, sep in zip(self.paragraphs, self.separators[1:]):
            parts.append(text)
            parts.append(sep)
        return "".join(parts)


@dataclass(frozen=True)
class DocumentRecord:
    id: str
    title: str
    body: str
    paragraph_ids: tuple[str, ...]
    text_length: int
    topic_id: int | None = None


@dataclass(frozen=True)
class Paragraph:
    id: str
    document_id: str
    index: int
    text: str
    entity_set_id: str | None = None


@dataclass(frozen=True)
class CorpusSnapshot:
    corpus_id: str
    documents: tuple[DocumentRecord, ...]
    paragraphs: tuple[Paragraph, ...]
    created_at: str
    content_hash: str
    document_index: dict[str, DocumentRecord] = field(compare=False, hash=False, default_factory=dict)
    paragraph_index: dict[str, Paragraph] = field(compare=False, hash=False, default_factory=dict)

    def __post_init__(self) -> None:
        object.__setattr__(self, "document_index", {d.id: d for d in self.documents})
        object.__setattr__(self, "paragraph_index", {p.id: p for p in self.paragraphs})

    def document(self, doc_id: str) -> DocumentRecord:
        try:
            return self.document_index[doc_id]
        except KeyError:
            raise CorpusError(f"unknown document: {doc_id}") from None

    def paragraphs_of(self, doc_id: str) -> list[Paragraph]:
        doc = self.document(doc_id)
        return [self.paragraph_index[pid] for pid in doc.paragraph_ids]

    def canonical_json(self) -> str:
        """Deterministic serialization of the snapshot content.

        The build timestamp is deliberately excluded: two ingests of
        byte-identical input yield byte-identical canonical forms.
        """
        payload = {
            "corpus_id": self.corpus_id,
            "content_hash": self.content_hash,
            "documents": [
                {
                    "id": d.id,
                    "title": d.title,
                    "body": d.body,
                    "paragraph_ids": list(d.paragraph_ids),
                    "text_length": d.text_length,
                }
                for d in self.documents
            ],
            "paragraphs": [
                {"id": p.id, "document_id": p.document_id, "index": p.index, "text": p.text}
                for p in self.paragraphs
            ],
        }
        return json.dumps(payload, sort_keys=True, ensure_ascii=False, separators=(",", ":"))


def segment(body: str, rules: SegmentationRules | None = None) -> Segmentation:
    """Split a body into paragraphs, recording separators for round-trips."""
    rules = rules or SegmentationRules()
    if not body:
        raise CorpusError("document body is empty")
    if body.strip() == "":
        log.warning("segmenting whitespace-only body")
        return Segmentation(paragraphs=(), separators=(body,), whitespace_only=True)
    if rules.mode == "blank_line":
        pieces = _BLANK_LINE_SEP.split(body)
        chunks = pieces[0::2]
        seps = pieces[1::2]
    else:
        chunks, seps = _split_sections(body, rules.section_patterns)

    # Merge whitespace-only chunks into the surrounding separators so no
    # empty paragraph is ever emitted and rejoin() still reconstructs body.
    paragraphs: list[str] = []
    separators: list[str] = [""]
    for i, chunk in enumerate(chunks):
        trailing = seps[i] if i < len(seps) else ""
        if chunk.strip() == "":
            separators[-1] += chunk + trailing
        else:
            paragraphs.append(chunk)
            separators.append(trailing)
    return Segmentation(tuple(paragraphs), tuple(separators))


def _split_sections(body: str, patterns: Sequence[str]) -> tuple[list[str], list[str]]:
    compiled = [re.compile(p) for p in patterns]
    lines = body.split("\n")
    starts = [i for i, line in enumerate(lines) if i > 0 and any(c.match(line) for c in compiled)]
    bounds = [0, *starts, len(lines)]
    chunks = ["\n".join(lines[a:b]) for a, b in zip(bounds, bounds[1:])]
    seps = ["\n"] * (len(chunks) - 1)
    return chunks, seps


def segment_document(body: str, rules: SegmentationRules | None = None) -> list[str]:
    """Ordered paragraph texts of a body (see :func:`segment` for separators)."""
    return list(segment(body, rules).paragraphs)


@dataclass(frozen=True)
class IngestRejection:
    line_number: int
    reason: str


def _doc_id(title: str, body: str, ordinal: int) -> str:
    h = hashlib.sha256(f"{ordinal}\x1f{title}\x1f{body}".encode("utf-8")).hexdigest()
    return f"d{h[:12]}"


def ingest_corpus(
    source: Iterable[str],
    rules: SegmentationRules | None = None,
    rejections: list[IngestRejection] | None = None,
) -> CorpusSnapshot:
    """Build a snapshot from JSONL lines with ``title``/``body`` (``id`` optional).

    Malformed entries are rejected individually (recorded with their line
    number) and ingestion continues; zero valid documents is an error.
    """
    rules = rules or SegmentationRules()
    documents: list[DocumentRecord] = []
    paragraphs: list[Paragraph] = []
    seen_ids: set[str] = set()
    hasher = hashlib.sha256()

    def reject(line_number: int, reason: str) -> None:
        log.warning("ingest: rejected line %d: %s", line_number, reason)
        if rejections is not None:
            rejections.append(IngestRejection(line_number, reason))

    for line_number, raw in enumerate(source, start=1):
        line = raw.strip()
        if not line:
            continue
        try:
            entry = json.loads(line)
        except json.JSONDecodeError as exc:
            reject(line_number, f"invalid JSON: {exc.msg}")
            continue
        if not isinstance(entry, dict):
            reject(line_number, "entry is not an object")
            continue
        title = entry.get("title")
        body = entry.get("body")
        if not isinstance(title, str) or not isinstance(body, str) or not body.strip():
            reject(line_number, "missing or empty 'title'/'body'")
            continue
        ordinal = len(documents)
        doc_id = entry.get("id") or _doc_id(title, body, ordinal)
        if not isinstance(doc_id, str) or doc_id in seen_ids:
            reject(line_number, f"duplicate or invalid id: {doc_id!r}")
            continue
        try:
            seg = segment(body, rules)
        except CorpusError as exc:
            reject(line_number, str(exc))
            continue
        if not seg.paragraphs:
            reject(line_number, "body segments to zero paragraphs")
            continue

        seen_ids.add(doc_id)
        hasher.update(title.encode("utf-8"))
        hasher.update(b"\x1f")
        hasher.update(body.encode("utf-8"))
        hasher.update(b"\x1e")

        para_ids = []
        for idx, text in enumerate(seg.paragraphs):
            pid = f"{doc_id}.p{idx}"
            para_ids.append(pid)
            paragraphs.append(Paragraph(id=pid, document_id=doc_id, index=idx, text=text))
        documents.append(
            DocumentRecord(
                id=doc_id,
                title=title,
                body=body,
                paragraph_ids=tuple(para_ids),
                text_length=sum(len(t) for t in seg.paragraphs),
            )
        )

    if not documents:
        raise CorpusError("no valid documents in source")

    content_hash = hasher.hexdigest()
    return CorpusSnapshot(
        corpus_id=f"c{content_hash[:12]}",
        documents=tuple(documents),
        paragraphs=tuple(paragraphs),
        created_at=datetime.now(timezone.utc).isoformat(),
        content_hash=content_hash,
    )


def search_documents(snapshot: CorpusSnapshot, keywords: Sequence[str]) -> list[str]:
    """Ids of documents whose title or body contains every keyword.

    Matching is case-folded substring; the result is ordered by document id.
    Adding a keyword can only shrink the result.
    """
    if not keywords:
        raise CorpusError("empty keyword list")
    terms = [k.strip().casefold() for k in keywords]
    if any(not t for t in terms):
        raise CorpusError("blank keyword in query")
    hits = []
    for doc in snapshot.documents:
        haystack = f"{doc.title}\n{doc.body}".casefold()
        if all(t in haystack for t in terms):
            hits.append(doc.id)
    return sorted(hits)


def save_snapshot(snapshot: CorpusSnapshot, directory: str | Path) -> Path:
    """Persist a snapshot as corpus.jsonl / paragraphs.jsonl / meta.json."""
    root = Path(directory) / snapshot.corpus_id
    root.mkdir(parents=True, exist_ok=True)

    def dump(obj: dict) -> str:
        return json.dumps(obj, sort_keys=True, ensure_ascii=False, separators=(",", ":"))

    with open(root / "corpus.jsonl", "w", encoding="utf-8") as fh:
        for d in snapshot.documents:
            fh.write(
                dump(
                    {
                        "id": d.id,
                        "title": d.title,
                        "body": d.body,
                        "paragraph_ids": list(d.paragraph_ids),
                        "text_length": d.text_length,
                    }
                )
                + "\n"
            )
    with open(root / "paragraphs.jsonl", "w", encoding="utf-8") as fh:
        for p in snapshot.paragraphs:
            fh.write(dump({"id": p.id, "document_id": p.document_id, "index": p.index, "text": p.text}) + "\n")
    with open(root / "meta.json", "w", encoding="utf-8") as fh:
        json.dump(
            {
                "corpus_id": snapshot.corpus_id,
                "content_hash": snapshot.content_hash,
                "created_at": snapshot.created_at,
                "document_count": len(snapshot.documents),
                "paragraph_count": len(snapshot.paragraphs),
            },
            fh,
            indent=2,
            sort_keys=True,
        )
        fh.write("\n")
    return root


def load_snapshot(directory: str | Path) -> CorpusSnapshot:
    root = Path(directory)
    meta = json.loads((root / "meta.json").read_text(encoding="utf-8"))
    documents = []
    with open(root / "corpus.jsonl", encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            d = json.loads(line)
            documents.append(
                DocumentRecord(
                    id=d["id"],
                    title=d["title"],
                    body=d["body"],
                    paragraph_ids=tuple(d["paragraph_ids"]),
                    text_length=d["text_length"],
                )
            )
    paragraphs = []
    with open(root / "paragraphs.jsonl", encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            p = json.loads(line)
            paragraphs.append(Paragraph(id=p["id"], document_id=p["document_id"], index=p["index"], text=p["text"]))
    return CorpusSnapshot(
        corpus_id=meta["corpus_id"],
        documents=tuple(documents),
        paragraphs=tuple(paragraphs),
        created_at=meta["created_at"],
        content_hash=meta["content_hash"],
    )


def with_topic(snapshot: CorpusSnapshot, topic_of: dict[str, int]) -> CorpusSnapshot:
    """Copy of the snapshot with topic ids filled in on the documents."""
    docs = tuple(replace(d, topic_id=topic_of.get(d.id)) for d in snapshot.documents)
    return replace(snapshot, documents=docs)
