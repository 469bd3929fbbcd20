"""Builders for every API payload; the server and the batch pipeline share
these so both surfaces stay schema-identical and deterministic."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from ..analysis import AnalyzedCorpus
from ..corpus import search_documents
from ..extraction import EntityType, annotate_document
from ..focus import FocusProfile, FocusTarget, MantleGeometry, focus_profile, mantle_geometry
from ..layout import (
    StarMapState,
    init_star_map,
    layout_space,
    pole_positions,
    solve,
)
from ..partition import INTRA, ParagraphGraph, PartitionResult, build_paragraph_graph, partition_graph
from ..tree import AssociationTree, radial_layout, tree_to_dict

SNIPPET_LENGTH = 120


@dataclass(frozen=True)
class LayoutSettings:
    boundary_radius: float = 1.0
    unit_force: float = 1.0
    padding_scale: float = 0.02
    star_radius_scale: float = 0.02
    tolerance_scale: float = 1e-3
    max_iters: int = 2000


def build_search_payload(analyzed: AnalyzedCorpus, keywords: Sequence[str]) -> dict:
    doc_ids = search_documents(analyzed.snapshot, keywords)
    topics = analyzed.topics
    documents = []
    for doc_id in doc_ids:
        doc = analyzed.snapshot.document(doc_id)
        topic = topics.topic_of.get(doc_id)
        documents.append(
            {
                "id": doc.id,
                "title": doc.title,
                "text_length": doc.text_length,
                "topic": topic,
                "top_terms": list(topics.top_terms[topic]) if topic is not None else [],
            }
        )
    return {
        "corpus_id": analyzed.snapshot.corpus_id,
        "keywords": list(keywords),
        "documents": documents,
    }


def build_space_payload(
    analyzed: AnalyzedCorpus, doc_ids: Sequence[str], theta: float, seed: int
) -> dict:
    lengths = {d: analyzed.snapshot.document(d).text_length for d in doc_ids}
    nodes = layout_space(
        list(doc_ids),
        lengths,
        analyzed.doc_similarities,
        theta,
        seed=seed,
        topic_of=analyzed.topics.topic_of,
    )
    pos = {d: i for i, d in enumerate(analyzed.doc_similarities.ids)}
    links = []
    for i, a in enumerate(doc_ids):
        for b in list(doc_ids)[i + 1 :]:
            sim = float(analyzed.doc_similarities.values[pos[a], pos[b]])
            if sim > theta:
                links.append({"source": a, "target": b, "similarity": sim})
    return {
        "theta": theta,
        "seed": seed,
        "nodes": [
            {
                "id": n.document_id,
                "x": n.position[0],
                "y": n.position[1],
                "z": n.position[2],
                "radius": n.radius,
                "topic": n.topic_color_index,
            }
            for n in nodes
        ],
        "links": links,
    }


@dataclass(frozen=True)
class StarmapArtifacts:
    payload: dict
    graph: ParagraphGraph
    partition: PartitionResult
    state: StarMapState


def build_starmap_artifacts(
    analyzed: AnalyzedCorpus,
    doc_ids: Sequence[str],
    theta: float,
    max_size: int,
    seed: int,
    layout_settings: LayoutSettings | None = None,
) -> StarmapArtifacts:
    settings = layout_settings or LayoutSettings()
    docs = [analyzed.snapshot.document(d) for d in doc_ids]
    paragraph_ids = tuple(pid for doc in docs for pid in doc.paragraph_ids)
    similarities = analyzed.paragraph_similarities(paragraph_ids)
    entity_set_of = {pid: analyzed.entity_sets[pid].id for pid in paragraph_ids}
    graph = build_paragraph_graph(docs, similarities, theta, entity_set_of=entity_set_of)
    partition = partition_graph(graph, max_size=max_size, seed=seed)

    state = init_star_map(
        graph,
        analyzed.entity_sets,
        parts=[list(p) for p in partition.parts if p],
        boundary_radius=settings.boundary_radius,
        unit_force=settings.unit_force,
        seed=seed,
        star_radius_scale=settings.star_radius_scale,
        padding_scale=settings.padding_scale,
    )
    result = solve(
        state,
        graph,
        tolerance=settings.tolerance_scale * settings.boundary_radius,
        max_iters=settings.max_iters,
    )

    poles = pole_positions(settings.boundary_radius)
    star_index = {pid: i for i, pid in enumerate(state.ids)}
    nonempty_parts = [list(p) for p in partition.parts if p]
    stars = []
    for i, pid in enumerate(state.ids):
        es = analyzed.entity_sets[pid]
        text = analyzed.snapshot.paragraph_index[pid].text
        stars.append(
            {
                "id": pid,
                "part": state.part_index[i],
                "document_id": state.document_ids[i],
                "entity_set_id": es.id,
                "x": result.positions[pid][0],
                "y": result.positions[pid][1],
                "radius": float(state.radii[i]),
                "constellation_color": state.constellation_color[i],
                "brightness_level": float(state.brightness_level[i]),
                "border_luminance": float(state.border_luminance[i]),
                "total_entities": int(es.total),
                "counts": {etype.name: count for etype, count in sorted(es.counts_by_type.items())},
                "snippet": text[:SNIPPET_LENGTH],
            }
        )
    lines = [
        {"source": e.u, "target": e.v}
        for e in graph.edges
        if e.kind == INTRA and e.u in star_index and e.v in star_index
    ]
    parts_info = []
    for index, part in enumerate(nonempty_parts):
        parts_info.append(
            {
                "index": index,
                "paragraph_ids": list(part),
                "mes_ids": [analyzed.entity_sets[pid].id for pid in part],
                "document_ids": sorted({analyzed.snapshot.paragraph_index[pid].document_id for pid in part}),
            }
        )
    payload = {
        "theta": theta,
        "seed": seed,
        "max_size": max_size,
        "boundary_radius": settings.boundary_radius,
        "cut_weight": partition.cut_weight,
        "iterations_used": result.iterations_used,
        "max_residual": result.max_residual,
        "poles": [
            {
                "type": EntityType(j).name,
                "angle": 2.0 * math.pi * j / 9.0,
                "x": float(poles[j, 0]),
                "y": float(poles[j, 1]),
            }
            for j in range(9)
        ],
        "stars": stars,
        "constellation_lines": lines,
        "parts": parts_info,
    }
    return StarmapArtifacts(payload=payload, graph=graph, partition=partition, state=state)


def build_tree_payload(tree: AssociationTree) -> dict:
    coords = radial_layout(tree)
    return {
        "mes_count": len(tree.index),
        "root": tree_to_dict(tree, coords),
    }


def build_focus_payload(profile: FocusProfile, geometry: MantleGeometry | None) -> dict:
    core: dict = {"kind": profile.kind, "label": profile.core_label}
    if profile.kind == "me" and profile.donut:
        core["type"] = profile.donut[0][0].name
    payload = {
        "core": core,
        "donut": [{"type": etype.name, "proportion": p} for etype, p in profile.donut],
        "h_t": profile.h_t,
        "associates": [
            {
                "id": a.entity_set_id,
                "strength": a.co_occurrence_strength,
                "heights": {etype.name: h for etype, h in sorted(a.heights_by_type.items())},
                "entities": [{"normalized": n, "type": t.name} for n, t in a.entities],
            }
            for a in profile.associates
        ],
    }
    if geometry is not None:
        payload["geometry"] = {
            "inner_radius": geometry.inner_radius,
            "axes": [
                {"index": i, "angle": angle, "entity_set_id": set_id}
                for i, angle, set_id in geometry.axes
            ],
            "bands": [
                {
                    "type": b.type.name,
                    "axis_a": b.axis_a,
                    "axis_b": b.axis_b,
                    "angle_a": b.angle_a,
                    "angle_b": b.angle_b,
                    "base_a": b.base_a,
                    "top_a": b.top_a,
                    "base_b": b.base_b,
                    "top_b": b.top_b,
                }
                for b in geometry.bands
            ],
        }
    return payload


def compute_focus(
    analyzed: AnalyzedCorpus,
    scope_mes_ids: Sequence[str],
    target: FocusTarget,
    h_t: float,
) -> dict:
    scope = {mid: analyzed.entity_sets_by_id[mid] for mid in scope_mes_ids}
    profile = focus_profile(target, scope, h_t=h_t)
    geometry = mantle_geometry(profile) if profile.associates else None
    return build_focus_payload(profile, geometry)


def build_document_payload(analyzed: AnalyzedCorpus, doc_id: str) -> dict:
    doc = analyzed.snapshot.document(doc_id)
    paragraphs = analyzed.snapshot.paragraphs_of(doc_id)
    annotated = annotate_document(doc, paragraphs, analyzed.mentions)
    return annotated.to_dict()
