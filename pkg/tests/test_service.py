from __future__ import annotations

import concurrent.futures
import json

import pytest
from fastapi.testclient import TestClient

from medcosmos.demo import generate_documents, write_lexicon_tsv
from medcosmos.service.app import create_app
from medcosmos.service.config import ServiceConfig, load_config
from medcosmos.service.schemas import validate_payload


@pytest.fixture(scope="module")
def client(tmp_path_factory):
    root = tmp_path_factory.mktemp("service")
    config = ServiceConfig(corpus_dir=str(root / "corpora"))
    app = create_app(config)
    with TestClient(app) as client:
        yield client


@pytest.fixture(scope="module")
def corpus_id(client):
    docs = generate_documents(30, seed=3)
    response = client.post("/api/corpora", json={"documents": docs})
    assert response.status_code == 200, response.text
    payload = response.json()
    validate_payload("corpus", payload)
    return payload["corpus_id"]


@pytest.fixture()
def session_id(client, corpus_id):
    response = client.post("/api/sessions", json={"corpus_id": corpus_id})
    assert response.status_code == 200
    payload = response.json()
    validate_payload("session", payload)
    return payload["session_id"]


def search_ids(client, corpus_id, query="the"):
    response = client.get(f"/api/corpora/{corpus_id}/search", params={"q": query})
    assert response.status_code == 200
    return [d["id"] for d in response.json()["documents"]]


class TestCorpora:
    def test_ingest_reports_rejections(self, client):
        response = client.post(
            "/api/corpora",
            json={"documents": [{"title": "ok", "body": "fine text"}, {"title": "broken"}]},
        )
        assert response.status_code == 200
        payload = response.json()
        assert payload["document_count"] == 1
        assert payload["rejections"][0]["line_number"] == 2

    def test_ingest_all_invalid_is_400(self, client):
        response = client.post("/api/corpora", json={"documents": [{"title": "x"}]})
        assert response.status_code == 400

    def test_search_payload_sorted_and_valid(self, client, corpus_id):
        response = client.get(f"/api/corpora/{corpus_id}/search", params={"q": "patient"})
        assert response.status_code == 200
        payload = response.json()
        validate_payload("search", payload)
        ids = [d["id"] for d in payload["documents"]]
        assert ids == sorted(ids)

    def test_search_unknown_corpus_404(self, client):
        assert client.get("/api/corpora/nope/search", params={"q": "x"}).status_code == 404

    def test_search_empty_query_400(self, client, corpus_id):
        assert client.get(f"/api/corpora/{corpus_id}/search").status_code == 400

    def test_search_no_match_is_success(self, client, corpus_id):
        response = client.get(f"/api/corpora/{corpus_id}/search", params={"q": "qqqzzz"})
        assert response.status_code == 200
        assert response.json()["documents"] == []


class TestSessions:
    def test_defaults_applied(self, client, corpus_id):
        response = client.post("/api/sessions", json={"corpus_id": corpus_id})
        payload = response.json()
        assert payload["theta"] == 0.5
        assert payload["max_subgraph_size"] == 10

    def test_unknown_corpus_404(self, client):
        assert client.post("/api/sessions", json={"corpus_id": "nope"}).status_code == 404

    def test_invalid_theta_400(self, client, corpus_id):
        response = client.post("/api/sessions", json={"corpus_id": corpus_id, "theta": 1.5})
        assert response.status_code == 400


class TestSpace:
    def test_requires_selection(self, client, session_id):
        response = client.post(f"/api/sessions/{session_id}/space", json={})
        assert response.status_code == 400

    def test_nodes_and_theta_filter(self, client, corpus_id, session_id):
        ids = search_ids(client, corpus_id)[:5]
        response = client.post(
            f"/api/sessions/{session_id}/space",
            json={"document_ids": ids, "theta": 0.2, "seed": 1},
        )
        assert response.status_code == 200
        payload = response.json()
        validate_payload("space", payload)
        assert len(payload["nodes"]) == len(ids)
        assert all(link["similarity"] > 0.2 for link in payload["links"])

    def test_theta_one_no_links(self, client, corpus_id, session_id):
        ids = search_ids(client, corpus_id)[:4]
        response = client.post(
            f"/api/sessions/{session_id}/space",
            json={"document_ids": ids, "theta": 1.0, "seed": 1},
        )
        assert response.json()["links"] == []

    def test_repeat_call_identical(self, client, corpus_id, session_id):
        ids = search_ids(client, corpus_id)[:4]
        body = {"document_ids": ids, "theta": 0.4, "seed": 9}
        first = client.post(f"/api/sessions/{session_id}/space", json=body).json()
        second = client.post(f"/api/sessions/{session_id}/space", json=body).json()
        assert first == second

    def test_unknown_document_404(self, client, session_id):
        response = client.post(
            f"/api/sessions/{session_id}/space", json={"document_ids": ["ghost"]}
        )
        assert response.status_code == 404


class TestStarmap:
    def test_parts_respect_bound(self, client, corpus_id, session_id):
        ids = search_ids(client, corpus_id)[:6]
        response = client.post(
            f"/api/sessions/{session_id}/starmap",
            json={"document_ids": ids, "max_size": 4, "seed": 2},
        )
        assert response.status_code == 200
        payload = response.json()
        validate_payload("starmap", payload)
        assert all(len(p["paragraph_ids"]) <= 4 for p in payload["parts"])
        assert len(payload["poles"]) == 9

    def test_large_bound_single_part(self, client, corpus_id, session_id):
        ids = search_ids(client, corpus_id)[:2]
        response = client.post(
            f"/api/sessions/{session_id}/starmap",
            json={"document_ids": ids, "max_size": 100, "seed": 2},
        )
        payload = response.json()
        assert len(payload["parts"]) == 1
        assert payload["cut_weight"] == 0.0

    def test_fixed_seed_identical_positions(self, client, corpus_id, session_id):
        ids = search_ids(client, corpus_id)[:5]
        body = {"document_ids": ids, "max_size": 5, "seed": 11}
        first = client.post(f"/api/sessions/{session_id}/starmap", json=body).json()
        second = client.post(f"/api/sessions/{session_id}/starmap", json=body).json()
        assert first["stars"] == second["stars"]

    def test_empty_selection_400(self, client, session_id):
        response = client.post(f"/api/sessions/{session_id}/starmap", json={})
        assert response.status_code == 400


class TestTreeEndpoints:
    def _starmap(self, client, corpus_id, session_id, n_docs=5):
        ids = search_ids(client, corpus_id)[:n_docs]
        response = client.post(
            f"/api/sessions/{session_id}/starmap",
            json={"document_ids": ids, "max_size": 6, "seed": 5},
        )
        return response.json()

    def test_build_from_parts_conserves_sets(self, client, corpus_id, session_id):
        starmap = self._starmap(client, corpus_id, session_id)
        part_ids = [p["index"] for p in starmap["parts"][:2]]
        expected = sum(len(p["mes_ids"]) for p in starmap["parts"][:2])
        response = client.post(f"/api/sessions/{session_id}/tree", json={"part_ids": part_ids})
        assert response.status_code == 200
        payload = response.json()
        validate_payload("tree", payload)
        assert payload["mes_count"] == expected

    def test_add_duplicate_conflicts(self, client, corpus_id, session_id):
        starmap = self._starmap(client, corpus_id, session_id)
        part = starmap["parts"][0]
        client.post(f"/api/sessions/{session_id}/tree", json={"part_ids": [part["index"]]})
        response = client.post(
            f"/api/sessions/{session_id}/tree/add", json={"mes_ids": [part["mes_ids"][0]]}
        )
        assert response.status_code == 409

    def test_add_new_set_grows_tree(self, client, corpus_id, session_id):
        starmap = self._starmap(client, corpus_id, session_id)
        parts = starmap["parts"]
        first = client.post(
            f"/api/sessions/{session_id}/tree", json={"part_ids": [parts[0]["index"]]}
        ).json()
        other = parts[1]["mes_ids"][0]
        response = client.post(f"/api/sessions/{session_id}/tree/add", json={"mes_ids": [other]})
        assert response.status_code == 200
        assert response.json()["mes_count"] == first["mes_count"] + 1

    def test_unknown_part_404(self, client, corpus_id, session_id):
        self._starmap(client, corpus_id, session_id)
        response = client.post(f"/api/sessions/{session_id}/tree", json={"part_ids": [999]})
        assert response.status_code == 404

    def test_tree_before_starmap_400(self, client, corpus_id):
        session = client.post("/api/sessions", json={"corpus_id": corpus_id}).json()
        response = client.post(
            f"/api/sessions/{session['session_id']}/tree", json={"part_ids": [0]}
        )
        assert response.status_code == 400

    def test_racing_adds_serialize(self, client, corpus_id, session_id):
        starmap = self._starmap(client, corpus_id, session_id, n_docs=8)
        parts = starmap["parts"]
        client.post(f"/api/sessions/{session_id}/tree", json={"part_ids": [parts[0]["index"]]})
        base = client.post(
            f"/api/sessions/{session_id}/focus",
            json={"target": {"kind": "mes", "entity_set_id": parts[0]["mes_ids"][0]}},
        )
        assert base.status_code == 200
        extra = [m for p in parts[1:] for m in p["mes_ids"]][:6]

        def add(mes_id: str):
            return client.post(
                f"/api/sessions/{session_id}/tree/add", json={"mes_ids": [mes_id]}
            ).status_code

        with concurrent.futures.ThreadPoolExecutor(max_workers=4) as pool:
            statuses = list(pool.map(add, extra))
        assert all(s == 200 for s in statuses)
        final = client.post(f"/api/sessions/{session_id}/tree/add", json={"mes_ids": [extra[0]]})
        assert final.status_code == 409  # everything landed exactly once


class TestFocusEndpoint:
    def _prepare(self, client, corpus_id, session_id):
        ids = search_ids(client, corpus_id)[:6]
        starmap = client.post(
            f"/api/sessions/{session_id}/starmap",
            json={"document_ids": ids, "max_size": 6, "seed": 5},
        ).json()
        part_ids = [p["index"] for p in starmap["parts"]]
        client.post(f"/api/sessions/{session_id}/tree", json={"part_ids": part_ids})
        return starmap

    def test_me_target_single_slice(self, client, corpus_id, session_id):
        starmap = self._prepare(client, corpus_id, session_id)
        star = next(s for s in starmap["stars"] if s["total_entities"] > 0)
        some_type = next(iter(star["counts"]))
        doc_payload = client.get(f"/api/documents/{star['document_id']}").json()
        surface = next(
            span["surface"]
            for p in doc_payload["paragraphs"]
            if p["paragraph_id"] == star["id"]
            for span in p["spans"]
            if span["type"] == some_type
        )
        response = client.post(
            f"/api/sessions/{session_id}/focus",
            json={"target": {"kind": "me", "normalized": surface.lower(), "type": some_type}},
        )
        assert response.status_code == 200
        payload = response.json()
        validate_payload("focus", payload)
        assert len(payload["donut"]) == 1
        assert payload["donut"][0]["proportion"] == 1.0

    def test_mes_target_proportions_sum_to_one(self, client, corpus_id, session_id):
        starmap = self._prepare(client, corpus_id, session_id)
        star = next(s for s in starmap["stars"] if s["total_entities"] > 1)
        response = client.post(
            f"/api/sessions/{session_id}/focus",
            json={"target": {"kind": "mes", "entity_set_id": star["entity_set_id"]}},
        )
        assert response.status_code == 200
        payload = response.json()
        validate_payload("focus", payload)
        assert sum(d["proportion"] for d in payload["donut"]) == pytest.approx(1.0, abs=1e-9)

    def test_unknown_target_404(self, client, corpus_id, session_id):
        self._prepare(client, corpus_id, session_id)
        response = client.post(
            f"/api/sessions/{session_id}/focus",
            json={"target": {"kind": "mes", "entity_set_id": "ghost"}},
        )
        assert response.status_code == 404

    def test_focus_without_tree_400(self, client, corpus_id):
        session = client.post("/api/sessions", json={"corpus_id": corpus_id}).json()
        response = client.post(
            f"/api/sessions/{session['session_id']}/focus",
            json={"target": {"kind": "me", "normalized": "bone", "type": "bod"}},
        )
        assert response.status_code == 400


class TestDocuments:
    def test_spans_slice_to_surface(self, client, corpus_id):
        doc_id = search_ids(client, corpus_id)[0]
        response = client.get(f"/api/documents/{doc_id}")
        assert response.status_code == 200
        payload = response.json()
        validate_payload("document", payload)
        for paragraph in payload["paragraphs"]:
            for span in paragraph["spans"]:
                assert paragraph["text"][span["start"] : span["end"]] == span["surface"]

    def test_unknown_document_404(self, client):
        assert client.get("/api/documents/ghost").status_code == 404


class TestConfig:
    def test_toml_and_env_overrides(self, tmp_path):
        path = tmp_path / "config.toml"
        path.write_text(
            "[server]\nport = 9100\n\n[defaults]\ntheta = 0.7\n\n[layout]\nmax_iters = 500\n"
        )
        config = load_config(path, env={})
        assert config.port == 9100
        assert config.default_theta == 0.7
        assert config.max_iters == 500
        overridden = load_config(path, env={"MEDCOSMOS_SERVER_PORT": "9200"})
        assert overridden.port == 9200

    def test_invalid_values_rejected(self, tmp_path):
        from medcosmos.service.config import ConfigError

        path = tmp_path / "config.toml"
        path.write_text("[defaults]\ntheta = 1.5\n")
        with pytest.raises(ConfigError):
            load_config(path, env={})


class TestDemoCorpus:
    def test_generation_deterministic(self):
        assert generate_documents(20, seed=5) == generate_documents(20, seed=5)

    def test_lexicon_tsv_round_trip(self, tmp_path):
        from medcosmos.extraction import load_lexicon

        path = write_lexicon_tsv(tmp_path / "lexicon.tsv")
        lexicon = load_lexicon(path)
        assert lexicon.entries["zoledronic acid"].name == "dru"

    def test_documents_contain_lexicon_terms(self):
        from medcosmos.demo import demo_lexicon
        from medcosmos.extraction import LexiconExtractor, extract_entities

        extractor = LexiconExtractor(demo_lexicon())
        docs = generate_documents(5, seed=1)
        hits = sum(len(extract_entities(d["body"], extractor)) for d in docs)
        assert hits > 10
