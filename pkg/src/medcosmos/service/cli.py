"""Command line: ingest corpora, serve the API, run the batch pipeline."""
from __future__ import annotations

import json
import sys
from collections import Counter
from pathlib import Path

import click

from ..analysis import AnalysisSettings, analyze_corpus
from ..corpus import (
    CorpusError,
    IngestRejection,
    SegmentationRules,
    ingest_corpus,
    load_snapshot,
    save_snapshot,
)
from ..demo import demo_lexicon, write_demo_corpus
from ..extraction import Lexicon, load_lexicon
from ..focus import FocusTarget
from .config import ServiceConfig, load_config
from .payloads import (
    LayoutSettings,
    build_document_payload,
    build_search_payload,
    build_space_payload,
    build_starmap_artifacts,
    build_tree_payload,
    compute_focus,
)
from .schemas import validate_payload


def _dump(path: Path, payload: dict) -> None:
    path.write_text(
        json.dumps(payload, sort_keys=True, ensure_ascii=False, separators=(",", ":")) + "\n",
        encoding="utf-8",
    )


def _load_service_config(config_path: str | None) -> ServiceConfig:
    return load_config(config_path) if config_path else load_config()


def _lexicon_from_config(config: ServiceConfig) -> Lexicon:
    if config.lexicon_path:
        return load_lexicon(config.lexicon_path)
    return demo_lexicon()


@click.group()
def main() -> None:
    """Knowledge-exploration engine for medical text corpora."""


@main.command()
@click.argument("source", type=click.Path(exists=True, dir_okay=False))
@click.option("--corpus-dir", default="./corpora", show_default=True, help="Corpus storage directory.")
@click.option(
    "--segmentation",
    type=click.Choice(["blank_line", "sections"]),
    default="blank_line",
    show_default=True,
)
def ingest(source: str, corpus_dir: str, segmentation: str) -> None:
    """Ingest a JSONL file (one {title, body} object per line)."""
    rejections: list[IngestRejection] = []
    try:
        with open(source, encoding="utf-8") as fh:
            snapshot = ingest_corpus(fh, SegmentationRules(mode=segmentation), rejections=rejections)
    except CorpusError as exc:
        raise click.ClickException(str(exc)) from None
    root = save_snapshot(snapshot, corpus_dir)
    for r in rejections:
        click.echo(f"rejected line {r.line_number}: {r.reason}", err=True)
    click.echo(f"corpus {snapshot.corpus_id}: {len(snapshot.documents)} documents, "
               f"{len(snapshot.paragraphs)} paragraphs -> {root}")


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), default=None)
def serve(config_path: str | None) -> None:
    """Run the HTTP service."""
    import uvicorn

    from .app import create_app

    config = _load_service_config(config_path)
    uvicorn.run(create_app(config), host=config.host, port=config.port)


@main.command()
@click.option("--out", "out_dir", default="./demo-data", show_default=True)
@click.option("--docs", default=1000, show_default=True)
@click.option("--seed", default=7, show_default=True)
def demo(out_dir: str, docs: int, seed: int) -> None:
    """Write the synthetic demo corpus (JSONL) and its lexicon (TSV)."""
    corpus_path, lexicon_path = write_demo_corpus(out_dir, count=docs, seed=seed)
    click.echo(f"wrote {corpus_path} and {lexicon_path}")


@main.command()
@click.option("--corpus", "corpus_id", required=True, help="Corpus id under the corpus directory.")
@click.option("--query", "keywords", multiple=True, required=True, help="Search keyword (repeatable).")
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False))
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--seed", default=0, show_default=True)
@click.option("--theta", default=None, type=float, help="Similarity threshold (default from config).")
@click.option("--max-size", default=None, type=int, help="Subgraph size bound (default from config).")
@click.option("--limit", default=50, show_default=True, help="Documents taken into the star map.")
def pipeline(
    corpus_id: str,
    keywords: tuple[str, ...],
    out_dir: str,
    config_path: str | None,
    seed: int,
    theta: float | None,
    max_size: int | None,
    limit: int,
) -> None:
    """Batch export of all exploration payloads for one query.

    Deterministic: re-running with the same inputs and seed writes
    byte-identical files.
    """
    config = _load_service_config(config_path)
    theta = config.default_theta if theta is None else theta
    max_size = config.default_max_subgraph_size if max_size is None else max_size
    corpus_path = Path(config.corpus_dir) / corpus_id
    if not (corpus_path / "meta.json").exists():
        raise click.ClickException(f"unknown corpus: {corpus_id} (looked in {config.corpus_dir})")

    snapshot = load_snapshot(corpus_path)
    lexicon = _lexicon_from_config(config)
    analyzed = analyze_corpus(
        snapshot,
        lexicon,
        AnalysisSettings(
            embedding_dimension=config.embedding_dimension,
            embedding_seed=config.embedding_seed,
            topics_k=config.topics_k,
            topics_seed=config.topics_seed,
        ),
    )
    layout_settings = LayoutSettings(
        boundary_radius=config.boundary_radius,
        unit_force=config.unit_force,
        padding_scale=config.padding_scale,
        star_radius_scale=config.star_radius_scale,
        tolerance_scale=config.tolerance_scale,
        max_iters=config.max_iters,
    )

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    search_payload = build_search_payload(analyzed, list(keywords))
    validate_payload("search", search_payload)
    _dump(out / "search.json", search_payload)
    matched = [d["id"] for d in search_payload["documents"]]
    if not matched:
        raise click.ClickException("query matched no documents")

    space_payload = build_space_payload(analyzed, matched, theta, seed)
    validate_payload("space", space_payload)
    _dump(out / "space.json", space_payload)

    selected = matched[:limit]
    artifacts = build_starmap_artifacts(analyzed, selected, theta, max_size, seed, layout_settings)
    validate_payload("starmap", artifacts.payload)
    _dump(out / "starmap.json", artifacts.payload)
    _dump(out / "partition.json", artifacts.partition.to_export_dict())
    validate_payload("partition", artifacts.partition.to_export_dict())

    from ..tree import build_tree

    ordered = sorted(
        (pid for part in artifacts.partition.parts for pid in part),
        key=lambda pid: (
            analyzed.snapshot.paragraph_index[pid].document_id,
            analyzed.snapshot.paragraph_index[pid].index,
        ),
    )
    mes_list = [analyzed.entity_sets[pid] for pid in ordered]
    tree = build_tree(mes_list)
    tree_payload = build_tree_payload(tree)
    validate_payload("tree", tree_payload)
    _dump(out / "tree.json", tree_payload)

    # Focus on the entity occurring in the most selected entity sets.
    counter: Counter[tuple[str, int]] = Counter()
    for mes in mes_list:
        for normalized, etype in mes.entities:
            counter[(normalized, int(etype))] += 1
    if counter:
        (normalized, etype_code), _count = min(
            counter.items(), key=lambda item: (-item[1], item[0])
        )
        from ..extraction import EntityType

        target = FocusTarget(kind="me", me=(normalized, EntityType(etype_code)))
        focus_payload = compute_focus(analyzed, [m.id for m in mes_list], target, h_t=6.0)
        validate_payload("focus", focus_payload)
        _dump(out / "focus.json", focus_payload)

    documents_payload = {
        "documents": [build_document_payload(analyzed, doc_id) for doc_id in selected]
    }
    for entry in documents_payload["documents"]:
        validate_payload("document", entry)
    _dump(out / "documents.json", documents_payload)

    manifest = {
        "corpus_id": corpus_id,
        "content_hash": snapshot.content_hash,
        "keywords": list(keywords),
        "theta": theta,
        "max_size": max_size,
        "seed": seed,
        "limit": limit,
        "matched_documents": len(matched),
        "selected_documents": len(selected),
        "files": [
            "search.json",
            "space.json",
            "starmap.json",
            "partition.json",
            "tree.json",
            "focus.json",
            "documents.json",
        ],
    }
    _dump(out / "manifest.json", manifest)
    click.echo(f"pipeline complete: {len(matched)} matches, {len(selected)} in star map -> {out}")


if __name__ == "__main__":
    main(sys.argv[1:])
