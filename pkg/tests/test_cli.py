from __future__ import annotations

import json
from pathlib import Path

import pytest
from click.testing import CliRunner

from medcosmos.service.cli import main
from medcosmos.service.schemas import validate_payload


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    runner = CliRunner()
    result = runner.invoke(main, ["demo", "--out", str(root / "data"), "--docs", "60", "--seed", "7"])
    assert result.exit_code == 0, result.output
    result = runner.invoke(
        main,
        ["ingest", str(root / "data" / "demo.jsonl"), "--corpus-dir", str(root / "corpora")],
    )
    assert result.exit_code == 0, result.output
    corpus_id = result.output.split()[1].rstrip(":")
    config = root / "config.toml"
    config.write_text(
        f'[corpus]\ndir = "{root / "corpora"}"\nlexicon = "{root / "data" / "lexicon.tsv"}"\n'
    )
    return {"root": root, "corpus_id": corpus_id, "config": config, "runner": runner}


class TestDemoAndIngest:
    def test_demo_files_written(self, workspace):
        data = workspace["root"] / "data"
        assert (data / "demo.jsonl").exists()
        assert (data / "lexicon.tsv").exists()
        lines = (data / "demo.jsonl").read_text().strip().splitlines()
        assert len(lines) == 60
        json.loads(lines[0])

    def test_ingest_created_corpus_dir(self, workspace):
        corpus_root = workspace["root"] / "corpora" / workspace["corpus_id"]
        assert (corpus_root / "meta.json").exists()
        meta = json.loads((corpus_root / "meta.json").read_text())
        assert meta["document_count"] == 60

    def test_ingest_missing_file_fails(self, workspace):
        result = workspace["runner"].invoke(main, ["ingest", "/nonexistent.jsonl"])
        assert result.exit_code != 0


class TestPipeline:
    def _run(self, workspace, out_name: str) -> Path:
        out = workspace["root"] / out_name
        result = workspace["runner"].invoke(
            main,
            [
                "pipeline",
                "--corpus", workspace["corpus_id"],
                "--query", "bone",
                "--out", str(out),
                "--config", str(workspace["config"]),
                "--seed", "3",
                "--limit", "12",
            ],
        )
        assert result.exit_code == 0, result.output
        return out

    def test_outputs_exist_and_validate(self, workspace):
        out = self._run(workspace, "out1")
        for name in ("search", "space", "starmap", "partition", "tree", "focus"):
            payload = json.loads((out / f"{name}.json").read_text())
            validate_payload(name, payload)
        documents = json.loads((out / "documents.json").read_text())
        for entry in documents["documents"]:
            validate_payload("document", entry)
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["corpus_id"] == workspace["corpus_id"]

    def test_rerun_byte_identical(self, workspace):
        first = self._run(workspace, "run_a")
        second = self._run(workspace, "run_b")
        for path in sorted(first.iterdir()):
            assert path.read_bytes() == (second / path.name).read_bytes(), path.name

    def test_unknown_corpus_fails(self, workspace):
        result = workspace["runner"].invoke(
            main,
            [
                "pipeline",
                "--corpus", "nope",
                "--query", "bone",
                "--out", str(workspace["root"] / "nope-out"),
                "--config", str(workspace["config"]),
            ],
        )
        assert result.exit_code != 0

    def test_no_match_fails_cleanly(self, workspace):
        result = workspace["runner"].invoke(
            main,
            [
                "pipeline",
                "--corpus", workspace["corpus_id"],
                "--query", "zzzqqq",
                "--out", str(workspace["root"] / "empty-out"),
                "--config", str(workspace["config"]),
            ],
        )
        assert result.exit_code != 0
        assert "matched no documents" in result.output
