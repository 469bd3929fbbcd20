"""Similarity and grouping relations between paragraphs and documents.

Embedding, document similarity and topic assignment are pluggable providers;
the shipped baselines are deterministic (feature hashing + seeded k-means)
so every downstream layout is reproducible.
"""
from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .extraction import EntitySet

DEFAULT_DIMENSION = 256
DEFAULT_HASH_SEED = 0x9E3779B9


class RelationError(Exception):
    pass


@dataclass(frozen=True)
class EmbeddingVector:
    values: tuple[float, ...]

    @property
    def norm(self) -> float:
        return math.sqrt(sum(v * v for v in self.values))

    @property
    def dimension(self) -> int:
        return len(self.values)

    def to_array(self) -> np.ndarray:
        return np.asarray(self.values, dtype=np.float64)


@dataclass(frozen=True)
class SimilarityMatrix:
    ids: tuple[str, ...]
    values: np.ndarray  # symmetric, entries in [-1, 1]

    def get(self, a: str, b: str) -> float:
        i, j = self.ids.index(a), self.ids.index(b)
        return float(self.values[i, j])


@dataclass(frozen=True)
class CoOccurrence:
    set_a: str
    set_b: str
    shared: tuple[tuple[str, int], ...]  # (normalized, type code)
    strength: int


@dataclass(frozen=True)
class TopicAssignment:
    topic_of: dict[str, int]
    top_terms: tuple[tuple[str, ...], ...]
    topic_color_index: tuple[int, ...]
    inertia: float


def _feature_hash(token: str, dimension: int, seed: int) -> tuple[int, float]:
    """Stable bucket and sign for a token (independent of PYTHONHASHSEED)."""
    digest = hashlib.blake2b(
        token.encode("utf-8"), digest_size=8, key=seed.to_bytes(8, "little")
    ).digest()
    value = int.from_bytes(digest, "little")
    bucket = value % dimension
    sign = 1.0 if (value >> 63) & 1 else -1.0
    return bucket, sign


def embed_paragraph(
    entity_set: EntitySet | None,
    text: str,
    dimension: int = DEFAULT_DIMENSION,
    seed: int = DEFAULT_HASH_SEED,
) -> EmbeddingVector:
    """Feature-hash entities (weight 2) and character trigrams (weight 1).

    The result is L2-normalized; all-zero input stays all-zero. Pure function
    of its inputs: byte-identical across runs and platforms.
    """
    acc = [0.0] * dimension
    if entity_set is not None:
        for normalized, etype in entity_set.entities:
            bucket, sign = _feature_hash(f"e\x1f{normalized}\x1f{int(etype)}", dimension, seed)
            acc[bucket] += 2.0 * sign
    if len(text) >= 3:
        for i in range(len(text) - 2):
            bucket, sign = _feature_hash(f"t\x1f{text[i:i + 3]}", dimension, seed)
            acc[bucket] += sign
    elif text:
        bucket, sign = _feature_hash(f"t\x1f{text}", dimension, seed)
        acc[bucket] += sign
    norm = math.sqrt(sum(v * v for v in acc))
    if norm > 0:
        acc = [v / norm for v in acc]
    return EmbeddingVector(values=tuple(acc))


def embed_document(paragraph_vectors: Sequence[EmbeddingVector]) -> EmbeddingVector:
    """Mean of the paragraph vectors, re-normalized (zero if all inputs zero)."""
    if not paragraph_vectors:
        raise RelationError("cannot embed a document with no paragraph vectors")
    dim = paragraph_vectors[0].dimension
    for v in paragraph_vectors:
        if v.dimension != dim:
            raise RelationError("paragraph vector dimensions differ")
    mean = np.mean([v.values for v in paragraph_vectors], axis=0)
    norm = float(np.linalg.norm(mean))
    if norm > 0:
        mean = mean / norm
    else:
        mean = np.zeros(dim)
    return EmbeddingVector(values=tuple(float(x) for x in mean))


def cosine(a: EmbeddingVector, b: EmbeddingVector) -> float:
    """Cosine similarity; 0 when either vector is zero."""
    if a.dimension != b.dimension:
        raise RelationError(f"dimension mismatch: {a.dimension} vs {b.dimension}")
    va, vb = a.to_array(), b.to_array()
    na, nb = float(np.linalg.norm(va)), float(np.linalg.norm(vb))
    if na == 0.0 or nb == 0.0:
        return 0.0
    return float(np.dot(va, vb) / (na * nb))


def similarity_matrix(ids: Sequence[str], vectors: Sequence[EmbeddingVector]) -> SimilarityMatrix:
    """All pairwise cosines; symmetric by construction."""
    if len(ids) != len(vectors):
        raise RelationError("ids and vectors are not aligned")
    if not ids:
        return SimilarityMatrix(ids=(), values=np.zeros((0, 0)))
    matrix = np.stack([v.to_array() for v in vectors])
    norms = np.linalg.norm(matrix, axis=1)
    safe = np.where(norms == 0.0, 1.0, norms)
    unit = matrix / safe[:, None]
    values = unit @ unit.T
    values[norms == 0.0, :] = 0.0
    values[:, norms == 0.0] = 0.0
    values = np.clip((values + values.T) / 2.0, -1.0, 1.0)
    return SimilarityMatrix(ids=tuple(ids), values=values)


def co_occurrence(a: EntitySet, b: EntitySet) -> CoOccurrence:
    """Shared entities of two sets ((normalized, type) identity)."""
    shared = sorted(a.entity_keys() & b.entity_keys(), key=lambda e: (int(e[1]), e[0]))
    return CoOccurrence(
        set_a=a.id,
        set_b=b.id,
        shared=tuple((norm, int(etype)) for norm, etype in shared),
        strength=len(shared),
    )


def _kmeans_plus_plus(points: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = points.shape[0]
    centers = np.empty((k, points.shape[1]))
    first = int(rng.integers(n))
    centers[0] = points[first]
    closest = np.sum((points - centers[0]) ** 2, axis=1)
    for c in range(1, k):
        total = float(closest.sum())
        if total <= 0.0:
            idx = int(rng.integers(n))
        else:
            r = rng.random() * total
            idx = int(np.searchsorted(np.cumsum(closest), r))
            idx = min(idx, n - 1)
        centers[c] = points[idx]
        closest = np.minimum(closest, np.sum((points - centers[c]) ** 2, axis=1))
    return centers


def _kmeans(
    points: np.ndarray, k: int, seed: int, max_iters: int = 100
) -> tuple[np.ndarray, float, list[float]]:
    rng = np.random.default_rng(seed)
    centers = _kmeans_plus_plus(points, k, rng)
    labels = np.zeros(points.shape[0], dtype=int)
    inertia_history: list[float] = []
    inertia = math.inf
    for _ in range(max_iters):
        d2 = np.sum((points[:, None, :] - centers[None, :, :]) ** 2, axis=2)
        labels = np.argmin(d2, axis=1)
        new_inertia = float(d2[np.arange(points.shape[0]), labels].sum())
        inertia_history.append(new_inertia)
        for c in range(k):
            members = points[labels == c]
            if len(members):
                centers[c] = members.mean(axis=0)
        if new_inertia >= inertia - 1e-12:
            inertia = min(inertia, new_inertia)
            break
        inertia = new_inertia
    return labels, inertia, inertia_history


def assign_topics(
    doc_ids: Sequence[str],
    doc_vectors: Sequence[EmbeddingVector],
    k: int,
    seed: int,
    doc_terms: dict[str, Sequence[str]] | None = None,
) -> TopicAssignment:
    """Seeded k-means over document vectors plus per-topic top terms.

    Terms are ranked by cluster-term frequency times log of inverse cluster
    frequency (ties: higher frequency, then lexicographic), top five.
    """
    if k < 1:
        raise RelationError("topic count must be >= 1")
    if k > len(doc_ids):
        raise RelationError(f"topic count {k} exceeds document count {len(doc_ids)}")
    points = np.stack([v.to_array() for v in doc_vectors])
    labels, inertia, _ = _kmeans(points, k, seed)
    topic_of = {doc_id: int(label) for doc_id, label in zip(doc_ids, labels)}

    top_terms: list[tuple[str, ...]] = []
    doc_terms = doc_terms or {}
    term_freq: list[dict[str, int]] = [dict() for _ in range(k)]
    for doc_id, topic in topic_of.items():
        for term in doc_terms.get(doc_id, ()):
            term_freq[topic][term] = term_freq[topic].get(term, 0) + 1
    cluster_freq: dict[str, int] = {}
    for freqs in term_freq:
        for term in freqs:
            cluster_freq[term] = cluster_freq.get(term, 0) + 1
    for topic in range(k):
        scored = [
            (freq * math.log(k / cluster_freq[term]), freq, term)
            for term, freq in term_freq[topic].items()
        ]
        scored.sort(key=lambda s: (-s[0], -s[1], s[2]))
        top_terms.append(tuple(term for _, _, term in scored[:5]))

    return TopicAssignment(
        topic_of=topic_of,
        top_terms=tuple(top_terms),
        topic_color_index=tuple(range(k)),
        inertia=inertia,
    )


def kmeans_inertia_history(points: np.ndarray, k: int, seed: int) -> list[float]:
    """Per-iteration objective values (used to check monotone descent)."""
    _, _, history = _kmeans(points, k, seed)
    return history


class ExternalEmbedder:
    """Client for a user-supplied embedding endpoint.

    Request: ``{"texts": [...]}``; response: ``{"vectors": [[...], ...]}``.
    Any provider honoring the EmbeddingVector contract can replace the
    hashing baseline through this hook.
    """

    def __init__(self, endpoint: str, timeout: float = 60.0, client=None):
        import httpx

        self.endpoint = endpoint
        self._client = client or httpx.Client(timeout=timeout)

    def __call__(self, texts: Sequence[str]) -> list[EmbeddingVector]:
        response = self._client.post(self.endpoint, json={"texts": list(texts)})
        response.raise_for_status()
        payload = response.json()
        vectors = payload.get("vectors")
        if not isinstance(vectors, list) or len(vectors) != len(texts):
            raise RelationError("embedding endpoint returned a malformed 'vectors' payload")
        result = []
        dimension = None
        for row in vectors:
            values = tuple(float(x) for x in row)
            if any(not math.isfinite(x) for x in values):
                raise RelationError("embedding endpoint returned non-finite values")
            if dimension is None:
                dimension = len(values)
            elif len(values) != dimension:
                raise RelationError("embedding endpoint returned ragged vectors")
            result.append(EmbeddingVector(values=values))
        return result
