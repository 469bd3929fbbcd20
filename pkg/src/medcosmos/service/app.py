"""HTTP API: corpora, sessions and the coordinated exploration endpoints.

Corpora are immutable once ingested and shared across sessions; each session
serializes its own mutating requests behind a lock, so concurrent updates
land in one serial order. All layout endpoints echo their seeds.
"""
from __future__ import annotations

import json
import threading
import uuid
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

from fastapi import FastAPI, HTTPException, Query
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel, Field

from .. import corpus as corpus_mod
from ..analysis import AnalysisSettings, AnalyzedCorpus, analyze_corpus
from ..corpus import CorpusError, SegmentationRules, ingest_corpus, load_snapshot, save_snapshot
from ..demo import demo_lexicon
from ..extraction import EntityType, ExtractionError, Lexicon, load_lexicon
from ..focus import FocusError, FocusTarget
from ..layout import LayoutError
from ..partition import PartitionError
from ..tree import AssociationTree, TreeError, add_node, build_tree
from .config import ServiceConfig
from .payloads import (
    LayoutSettings,
    StarmapArtifacts,
    build_document_payload,
    build_search_payload,
    build_space_payload,
    build_starmap_artifacts,
    build_tree_payload,
    compute_focus,
)


class IngestRequest(BaseModel):
    documents: list[dict] = Field(min_length=1)
    segmentation: str = "blank_line"


class SessionRequest(BaseModel):
    corpus_id: str
    theta: float | None = None
    max_subgraph_size: int | None = None


class SpaceRequest(BaseModel):
    document_ids: list[str] | None = None
    theta: float | None = None
    seed: int = 0


class StarmapRequest(BaseModel):
    document_ids: list[str] | None = None
    theta: float | None = None
    max_size: int | None = None
    seed: int = 0


class TreeRequest(BaseModel):
    part_ids: list[int] = Field(min_length=1)


class TreeAddRequest(BaseModel):
    mes_ids: list[str] = Field(min_length=1)


class FocusRequest(BaseModel):
    target: dict
    h_t: float = 6.0


@dataclass
class Session:
    session_id: str
    corpus_id: str
    theta: float
    max_subgraph_size: int
    created_at: str
    selected_document_ids: list[str] = field(default_factory=list)
    selected_part_ids: list[int] = field(default_factory=list)
    starmap: StarmapArtifacts | None = None
    tree: AssociationTree | None = None
    tree_scope_mes_ids: list[str] = field(default_factory=list)
    lock: threading.RLock = field(default_factory=threading.RLock)

    def to_payload(self) -> dict:
        return {
            "session_id": self.session_id,
            "corpus_id": self.corpus_id,
            "theta": self.theta,
            "max_subgraph_size": self.max_subgraph_size,
            "selected_document_ids": list(self.selected_document_ids),
            "selected_part_ids": list(self.selected_part_ids),
            "created_at": self.created_at,
        }


class AppState:
    """Corpora (immutable, shared) plus in-memory sessions with snapshots
    written to disk on every mutation (sessions are cheap to rebuild)."""

    def __init__(self, config: ServiceConfig):
        self.config = config
        self.corpus_dir = Path(config.corpus_dir)
        self.sessions_dir = self.corpus_dir / "sessions"
        self.lexicon = self._load_lexicon(config)
        self.analysis_settings = AnalysisSettings(
            embedding_dimension=config.embedding_dimension,
            embedding_seed=config.embedding_seed,
            topics_k=config.topics_k,
            topics_seed=config.topics_seed,
        )
        self.layout_settings = LayoutSettings(
            boundary_radius=config.boundary_radius,
            unit_force=config.unit_force,
            padding_scale=config.padding_scale,
            star_radius_scale=config.star_radius_scale,
            tolerance_scale=config.tolerance_scale,
            max_iters=config.max_iters,
        )
        self._corpora: dict[str, AnalyzedCorpus] = {}
        self._corpora_lock = threading.Lock()
        self.sessions: dict[str, Session] = {}
        self._sessions_lock = threading.Lock()

    @staticmethod
    def _load_lexicon(config: ServiceConfig) -> Lexicon:
        if config.lexicon_path:
            return load_lexicon(config.lexicon_path)
        return demo_lexicon()

    def corpus(self, corpus_id: str) -> AnalyzedCorpus:
        with self._corpora_lock:
            if corpus_id in self._corpora:
                return self._corpora[corpus_id]
        path = self.corpus_dir / corpus_id
        if not (path / "meta.json").exists():
            raise HTTPException(status_code=404, detail=f"unknown corpus: {corpus_id}")
        snapshot = load_snapshot(path)
        analyzed = analyze_corpus(snapshot, self.lexicon, self.analysis_settings)
        with self._corpora_lock:
            self._corpora.setdefault(corpus_id, analyzed)
            return self._corpora[corpus_id]

    def register_corpus(self, analyzed: AnalyzedCorpus) -> None:
        with self._corpora_lock:
            self._corpora[analyzed.snapshot.corpus_id] = analyzed

    def session(self, session_id: str) -> Session:
        with self._sessions_lock:
            session = self.sessions.get(session_id)
        if session is None:
            raise HTTPException(status_code=404, detail=f"unknown session: {session_id}")
        return session

    def create_session(self, request: SessionRequest) -> Session:
        self.corpus(request.corpus_id)  # 404 on unknown corpus
        theta = self.config.default_theta if request.theta is None else request.theta
        max_size = (
            self.config.default_max_subgraph_size
            if request.max_subgraph_size is None
            else request.max_subgraph_size
        )
        if not 0.0 <= theta <= 1.0:
            raise HTTPException(status_code=400, detail="theta must be in [0, 1]")
        if max_size < 1:
            raise HTTPException(status_code=400, detail="max_subgraph_size must be >= 1")
        session = Session(
            session_id=f"s{uuid.uuid4().hex[:12]}",
            corpus_id=request.corpus_id,
            theta=theta,
            max_subgraph_size=max_size,
            created_at=datetime.now(timezone.utc).isoformat(),
        )
        with self._sessions_lock:
            self.sessions[session.session_id] = session
        self.snapshot_session(session)
        return session

    def snapshot_session(self, session: Session) -> None:
        try:
            self.sessions_dir.mkdir(parents=True, exist_ok=True)
            path = self.sessions_dir / f"{session.session_id}.json"
            path.write_text(json.dumps(session.to_payload(), sort_keys=True), encoding="utf-8")
        except OSError:
            pass  # session persistence is best-effort; sessions rebuild cheaply


def _parse_focus_target(raw: dict) -> FocusTarget:
    kind = raw.get("kind")
    try:
        if kind == "me":
            return FocusTarget(
                kind="me", me=(str(raw["normalized"]), EntityType.parse(str(raw["type"])))
            )
        if kind == "mes":
            return FocusTarget(kind="mes", mes_id=str(raw["entity_set_id"]))
    except (KeyError, ExtractionError, FocusError) as exc:
        raise HTTPException(status_code=400, detail=f"invalid focus target: {exc}") from None
    raise HTTPException(status_code=400, detail=f"invalid focus kind: {kind!r}")


def create_app(config: ServiceConfig | None = None) -> FastAPI:
    config = config or ServiceConfig()
    state = AppState(config)
    app = FastAPI(title="medcosmos", version="0.1.0")
    app.state.engine = state

    @app.post("/api/corpora")
    def ingest(request: IngestRequest) -> dict:
        rejections: list[corpus_mod.IngestRejection] = []
        lines = (json.dumps(doc, ensure_ascii=False) for doc in request.documents)
        try:
            rules = SegmentationRules(mode=request.segmentation)
            snapshot = ingest_corpus(lines, rules, rejections=rejections)
        except CorpusError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from None
        save_snapshot(snapshot, state.corpus_dir)
        analyzed = analyze_corpus(snapshot, state.lexicon, state.analysis_settings)
        state.register_corpus(analyzed)
        return {
            "corpus_id": snapshot.corpus_id,
            "content_hash": snapshot.content_hash,
            "document_count": len(snapshot.documents),
            "paragraph_count": len(snapshot.paragraphs),
            "rejections": [{"line_number": r.line_number, "reason": r.reason} for r in rejections],
        }

    @app.get("/api/corpora/{corpus_id}/search")
    def search(corpus_id: str, q: list[str] = Query(default=[])) -> dict:
        analyzed = state.corpus(corpus_id)
        keywords = [part for item in q for part in item.split() if part]
        try:
            return build_search_payload(analyzed, keywords)
        except CorpusError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from None

    @app.post("/api/sessions")
    def create_session(request: SessionRequest) -> dict:
        return state.create_session(request).to_payload()

    @app.get("/api/sessions/{session_id}")
    def get_session(session_id: str) -> dict:
        return state.session(session_id).to_payload()

    @app.post("/api/sessions/{session_id}/space")
    def space(session_id: str, request: SpaceRequest) -> dict:
        session = state.session(session_id)
        analyzed = state.corpus(session.corpus_id)
        with session.lock:
            if request.document_ids is not None:
                unknown = [d for d in request.document_ids if d not in analyzed.snapshot.document_index]
                if unknown:
                    raise HTTPException(status_code=404, detail=f"unknown documents: {unknown}")
                session.selected_document_ids = list(request.document_ids)
            if request.theta is not None:
                if not 0.0 <= request.theta <= 1.0:
                    raise HTTPException(status_code=400, detail="theta must be in [0, 1]")
                session.theta = request.theta
            if not session.selected_document_ids:
                raise HTTPException(status_code=400, detail="session has no selected documents")
            payload = build_space_payload(
                analyzed, session.selected_document_ids, session.theta, request.seed
            )
            payload["session_id"] = session.session_id
            state.snapshot_session(session)
            return payload

    @app.post("/api/sessions/{session_id}/starmap")
    def starmap(session_id: str, request: StarmapRequest) -> dict:
        session = state.session(session_id)
        analyzed = state.corpus(session.corpus_id)
        with session.lock:
            doc_ids = request.document_ids or session.selected_document_ids
            if not doc_ids:
                raise HTTPException(status_code=400, detail="no documents selected")
            unknown = [d for d in doc_ids if d not in analyzed.snapshot.document_index]
            if unknown:
                raise HTTPException(status_code=404, detail=f"unknown documents: {unknown}")
            theta = session.theta if request.theta is None else request.theta
            max_size = session.max_subgraph_size if request.max_size is None else request.max_size
            try:
                artifacts = build_starmap_artifacts(
                    analyzed, doc_ids, theta, max_size, request.seed, state.layout_settings
                )
            except (PartitionError, LayoutError) as exc:
                raise HTTPException(status_code=400, detail=str(exc)) from None
            session.selected_document_ids = list(doc_ids)
            session.theta = theta
            session.max_subgraph_size = max_size
            session.starmap = artifacts
            session.selected_part_ids = []
            session.tree = None
            session.tree_scope_mes_ids = []
            payload = dict(artifacts.payload)
            payload["session_id"] = session.session_id
            state.snapshot_session(session)
            return payload

    @app.post("/api/sessions/{session_id}/tree")
    def tree(session_id: str, request: TreeRequest) -> dict:
        session = state.session(session_id)
        analyzed = state.corpus(session.corpus_id)
        with session.lock:
            if session.starmap is None:
                raise HTTPException(status_code=400, detail="no star map computed for this session")
            parts = {p["index"]: p for p in session.starmap.payload["parts"]}
            unknown = [i for i in request.part_ids if i not in parts]
            if unknown:
                raise HTTPException(status_code=404, detail=f"unknown parts: {unknown}")
            paragraph_ids = [pid for i in request.part_ids for pid in parts[i]["paragraph_ids"]]
            ordered = sorted(
                paragraph_ids,
                key=lambda pid: (
                    analyzed.snapshot.paragraph_index[pid].document_id,
                    analyzed.snapshot.paragraph_index[pid].index,
                ),
            )
            mes_list = [analyzed.entity_sets[pid] for pid in ordered]
            try:
                session.tree = build_tree(mes_list)
            except TreeError as exc:
                raise HTTPException(status_code=409, detail=str(exc)) from None
            session.selected_part_ids = list(request.part_ids)
            session.tree_scope_mes_ids = [m.id for m in mes_list]
            payload = build_tree_payload(session.tree)
            payload["session_id"] = session.session_id
            state.snapshot_session(session)
            return payload

    @app.post("/api/sessions/{session_id}/tree/add")
    def tree_add(session_id: str, request: TreeAddRequest) -> dict:
        session = state.session(session_id)
        analyzed = state.corpus(session.corpus_id)
        with session.lock:
            if session.tree is None:
                raise HTTPException(status_code=400, detail="no tree built for this session")
            unknown = [m for m in request.mes_ids if m not in analyzed.entity_sets_by_id]
            if unknown:
                raise HTTPException(status_code=404, detail=f"unknown entity sets: {unknown}")
            duplicates = [m for m in request.mes_ids if m in session.tree.index]
            if duplicates:
                raise HTTPException(status_code=409, detail=f"already in tree: {duplicates}")
            for mes_id in request.mes_ids:
                add_node(session.tree, analyzed.entity_sets_by_id[mes_id])
                session.tree_scope_mes_ids.append(mes_id)
            payload = build_tree_payload(session.tree)
            payload["session_id"] = session.session_id
            state.snapshot_session(session)
            return payload

    @app.post("/api/sessions/{session_id}/focus")
    def focus(session_id: str, request: FocusRequest) -> dict:
        session = state.session(session_id)
        analyzed = state.corpus(session.corpus_id)
        target = _parse_focus_target(request.target)
        with session.lock:
            scope = session.tree_scope_mes_ids
            if not scope:
                raise HTTPException(
                    status_code=400, detail="no association scope selected (build a tree first)"
                )
            try:
                payload = compute_focus(analyzed, scope, target, request.h_t)
            except FocusError as exc:
                status = 404 if "not in the focus scope" in str(exc) else 400
                raise HTTPException(status_code=status, detail=str(exc)) from None
            payload["session_id"] = session.session_id
            return payload

    @app.get("/api/documents/{doc_id}")
    def document(doc_id: str, corpus_id: str = Query(default=None)) -> dict:
        corpora = [corpus_id] if corpus_id else _known_corpora(state)
        for cid in corpora:
            analyzed = state.corpus(cid)
            if doc_id in analyzed.snapshot.document_index:
                return build_document_payload(analyzed, doc_id)
        raise HTTPException(status_code=404, detail=f"unknown document: {doc_id}")

    static_dir = config.static_dir
    if static_dir and Path(static_dir).is_dir():
        app.mount("/", StaticFiles(directory=static_dir, html=True), name="ui")

    return app


def _known_corpora(state: AppState) -> list[str]:
    found = []
    if state.corpus_dir.is_dir():
        for child in sorted(state.corpus_dir.iterdir()):
            if (child / "meta.json").exists():
                found.append(child.name)
    return found
