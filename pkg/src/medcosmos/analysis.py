"""End-to-end corpus analysis: extraction, embeddings, similarity, topics.

This is the shared layer the HTTP service and the batch pipeline both use;
everything it produces is deterministic given the snapshot and settings.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

from .corpus import CorpusSnapshot
from .extraction import (
    EntityMention,
    EntitySet,
    Extractor,
    Lexicon,
    LexiconExtractor,
    build_entity_set,
    extract_entities,
)
from .relations import (
    DEFAULT_DIMENSION,
    DEFAULT_HASH_SEED,
    EmbeddingVector,
    SimilarityMatrix,
    TopicAssignment,
    assign_topics,
    embed_document,
    embed_paragraph,
    similarity_matrix,
)


@dataclass(frozen=True)
class AnalysisSettings:
    embedding_dimension: int = DEFAULT_DIMENSION
    embedding_seed: int = DEFAULT_HASH_SEED
    topics_k: int = 4
    topics_seed: int = 0


@dataclass
class AnalyzedCorpus:
    snapshot: CorpusSnapshot
    settings: AnalysisSettings
    mentions: dict[str, list[EntityMention]]  # paragraph id -> mentions
    entity_sets: dict[str, EntitySet]  # paragraph id -> set
    entity_sets_by_id: dict[str, EntitySet]  # entity set id -> set
    paragraph_vectors: dict[str, EmbeddingVector]
    doc_vectors: dict[str, EmbeddingVector]
    doc_similarities: SimilarityMatrix
    topics: TopicAssignment
    _paragraph_sim_cache: dict[tuple[str, ...], SimilarityMatrix] = field(default_factory=dict)

    def paragraph_similarities(self, paragraph_ids: tuple[str, ...]) -> SimilarityMatrix:
        if paragraph_ids not in self._paragraph_sim_cache:
            vectors = [self.paragraph_vectors[pid] for pid in paragraph_ids]
            self._paragraph_sim_cache[paragraph_ids] = similarity_matrix(paragraph_ids, vectors)
            if len(self._paragraph_sim_cache) > 8:
                self._paragraph_sim_cache.pop(next(iter(self._paragraph_sim_cache)))
        return self._paragraph_sim_cache[paragraph_ids]

    def entity_set_of_paragraph(self, paragraph_id: str) -> EntitySet:
        return self.entity_sets[paragraph_id]


def analyze_corpus(
    snapshot: CorpusSnapshot,
    lexicon: Lexicon,
    settings: AnalysisSettings | None = None,
    extractor: Extractor | None = None,
    embed_provider: Callable[[list[str]], list[EmbeddingVector]] | None = None,
) -> AnalyzedCorpus:
    settings = settings or AnalysisSettings()
    extractor = extractor or LexiconExtractor(lexicon)

    mentions: dict[str, list[EntityMention]] = {}
    entity_sets: dict[str, EntitySet] = {}
    paragraph_vectors: dict[str, EmbeddingVector] = {}
    for paragraph in snapshot.paragraphs:
        found = extract_entities(paragraph.text, extractor)
        mentions[paragraph.id] = found
        es = build_entity_set(paragraph, found)
        entity_sets[paragraph.id] = es
        if embed_provider is None:
            paragraph_vectors[paragraph.id] = embed_paragraph(
                es, paragraph.text, dimension=settings.embedding_dimension, seed=settings.embedding_seed
            )
    if embed_provider is not None:
        texts = [p.text for p in snapshot.paragraphs]
        vectors = embed_provider(texts)
        if len(vectors) != len(texts):
            raise ValueError("embedding provider returned a mismatched vector count")
        paragraph_vectors = {p.id: v for p, v in zip(snapshot.paragraphs, vectors)}

    doc_vectors: dict[str, EmbeddingVector] = {}
    doc_terms: dict[str, list[str]] = {}
    for doc in snapshot.documents:
        vectors = [paragraph_vectors[pid] for pid in doc.paragraph_ids]
        doc_vectors[doc.id] = embed_document(vectors)
        terms: list[str] = []
        for pid in doc.paragraph_ids:
            terms.extend(norm for norm, _ in entity_sets[pid].entities)
        doc_terms[doc.id] = sorted(set(terms))

    doc_ids = [d.id for d in snapshot.documents]
    doc_similarities = similarity_matrix(doc_ids, [doc_vectors[d] for d in doc_ids])
    k = max(1, min(settings.topics_k, len(doc_ids)))
    topics = assign_topics(doc_ids, [doc_vectors[d] for d in doc_ids], k, settings.topics_seed, doc_terms)

    return AnalyzedCorpus(
        snapshot=snapshot,
        settings=settings,
        mentions=mentions,
        entity_sets=entity_sets,
        entity_sets_by_id={es.id: es for es in entity_sets.values()},
        paragraph_vectors=paragraph_vectors,
        doc_vectors=doc_vectors,
        doc_similarities=doc_similarities,
        topics=topics,
    )
