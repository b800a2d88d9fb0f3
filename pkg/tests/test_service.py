from __future__ import annotations

import json
import threading
import time

import pytest
from fastapi.testclient import TestClient

import annomine.service as service
from annomine.config import EngineConfig
from annomine.service import create_app
from synthcorpus import write_corpus


@pytest.fixture
def corpus_manifest(tmp_path):
    path = write_corpus(tmp_path / "corpus", seed=7, n_submissions=12,
                        n_annotations=4, target_instances=24, early_window=4)
    doc = json.loads(path.read_text(encoding="utf-8"))
    # the service resolves relative paths against its own cwd, so inline them
    for sub in doc["submissions"]:
        sub["path"] = str(tmp_path / "corpus" / sub["path"])
    return doc


@pytest.fixture
def client(tmp_path):
    app = create_app(tmp_path / "sessions", EngineConfig(), rebuild_after_instances=1000)
    with TestClient(app) as c:
        yield c


def create_session(client, manifest) -> str:
    response = client.post("/v1/sessions", json=manifest)
    assert response.status_code == 200, response.text
    return response.json()["session_id"]


def empty_manifest(manifest) -> dict:
    doc = dict(manifest)
    doc["instances"] = []
    return doc


class TestCreateSession:
    def test_empty_manifest_gives_generation_zero(self, client, corpus_manifest):
        sid = create_session(client, empty_manifest(corpus_manifest))
        sub = corpus_manifest["submissions"][0]["id"]
        got = client.get(f"/v1/sessions/{sid}/submissions/{sub}/suggest",
                         params={"line": 2}).json()
        assert got["generation"] == 0
        assert got["suggestions"] == []

    def test_prior_instances_trained_at_create(self, client, corpus_manifest):
        sid = create_session(client, corpus_manifest)
        inst = corpus_manifest["instances"][-1]
        got = client.get(
            f"/v1/sessions/{sid}/submissions/{inst['submission']}/suggest",
            params={"line": inst["line"]}).json()
        assert got["generation"] == 1
        assert got["suggestions"]
        assert got["suggestions"][0]["annotation_id"] == inst["annotation"]

    def test_duplicate_create_distinct_ids(self, client, corpus_manifest):
        assert create_session(client, corpus_manifest) != \
            create_session(client, corpus_manifest)

    def test_bad_manifest_is_problem_detail(self, client, corpus_manifest):
        doc = dict(corpus_manifest)
        doc["instances"] = [{"annotation": "ghost", "submission": "nope", "line": 1}]
        response = client.post("/v1/sessions", json=doc)
        assert response.status_code == 400
        body = response.json()
        assert set(body) == {"status", "code", "message"}
        assert "ghost" in body["message"]


class TestEndpoints:
    def test_submissions_reviewed_flags(self, client, corpus_manifest):
        sid = create_session(client, corpus_manifest)
        subs = client.get(f"/v1/sessions/{sid}/submissions").json()
        assert [s["id"] for s in subs] == [s["id"] for s in corpus_manifest["submissions"]]
        reviewed = {i["submission"] for i in corpus_manifest["instances"]}
        for sub in subs:
            assert sub["reviewed"] == (sub["id"] in reviewed)

    def test_source_roundtrip(self, client, corpus_manifest, tmp_path):
        sid = create_session(client, corpus_manifest)
        sub = corpus_manifest["submissions"][0]
        got = client.get(f"/v1/sessions/{sid}/submissions/{sub['id']}/source").json()
        assert got["grammar"] == "python"
        assert got["source"].startswith("def solve_0")

    def test_annotation_library(self, client, corpus_manifest):
        sid = create_session(client, corpus_manifest)
        library = client.get(f"/v1/sessions/{sid}/annotations").json()
        assert {a["id"] for a in library} == \
            {a["id"] for a in corpus_manifest["annotations"]}

    def test_unknown_session_and_submission(self, client, corpus_manifest):
        assert client.get("/v1/sessions/nope/submissions").status_code == 404
        sid = create_session(client, corpus_manifest)
        assert client.get(f"/v1/sessions/{sid}/submissions/nope/source").status_code == 404

    def test_suggest_blank_line_has_reason(self, client, corpus_manifest, tmp_path):
        doc = empty_manifest(corpus_manifest)
        blank = tmp_path / "blank.py"
        blank.write_text("x = 1\n\ny = 2\n", encoding="utf-8")
        doc["submissions"] = list(doc["submissions"]) + [{"id": "blank", "path": str(blank)}]
        sid = create_session(client, doc)
        got = client.get(f"/v1/sessions/{sid}/submissions/blank/suggest",
                         params={"line": 2}).json()
        assert got["suggestions"] == []
        assert "no context" in got["reason"]


class TestRecordInstance:
    def test_record_known_annotation(self, client, corpus_manifest):
        sid = create_session(client, corpus_manifest)
        sub = corpus_manifest["instances"][0]["submission"]
        ann = corpus_manifest["instances"][0]["annotation"]
        response = client.post(
            f"/v1/sessions/{sid}/submissions/{sub}/instances",
            json={"line": 2, "annotation_id": ann})
        assert response.status_code == 200
        body = response.json()
        assert body["annotation_id"] == ann
        assert body["context_extracted"] is True

    def test_record_on_blank_line_flagged(self, client, corpus_manifest, tmp_path):
        doc = empty_manifest(corpus_manifest)
        blank = tmp_path / "blank2.py"
        blank.write_text("x = 1\n\ny = 2\n", encoding="utf-8")
        doc["submissions"] = list(doc["submissions"]) + [{"id": "blank2", "path": str(blank)}]
        sid = create_session(client, doc)
        ann = corpus_manifest["annotations"][0]["id"]
        body = client.post(
            f"/v1/sessions/{sid}/submissions/blank2/instances",
            json={"line": 2, "annotation_id": ann}).json()
        assert body["context_extracted"] is False

    def test_new_annotation_minted(self, client, corpus_manifest):
        sid = create_session(client, corpus_manifest)
        sub = corpus_manifest["submissions"][0]["id"]
        body = client.post(
            f"/v1/sessions/{sid}/submissions/{sub}/instances",
            json={"line": 2, "text": "brand new feedback"}).json()
        assert body["annotation_id"].startswith("new-")
        library = client.get(f"/v1/sessions/{sid}/annotations").json()
        assert any(a["id"] == body["annotation_id"] and a["text"] == "brand new feedback"
                   for a in library)

    def test_bad_line_rejected(self, client, corpus_manifest):
        sid = create_session(client, corpus_manifest)
        sub = corpus_manifest["submissions"][0]["id"]
        ann = corpus_manifest["annotations"][0]["id"]
        response = client.post(
            f"/v1/sessions/{sid}/submissions/{sub}/instances",
            json={"line": 9999, "annotation_id": ann})
        assert response.status_code == 400
        assert response.json()["code"] == "bad_line"

    def test_concurrent_records_both_persisted(self, client, corpus_manifest):
        sid = create_session(client, corpus_manifest)
        sub = corpus_manifest["submissions"][0]["id"]
        ann = corpus_manifest["annotations"][0]["id"]
        results = []

        def post():
            results.append(client.post(
                f"/v1/sessions/{sid}/submissions/{sub}/instances",
                json={"line": 2, "annotation_id": ann}).json())

        threads = [threading.Thread(target=post) for _ in range(2)]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        ids = {r["instance_id"] for r in results}
        assert len(ids) == 2  # total order assigned, both kept


class TestRebuild:
    def test_rebuild_without_changes_increments_generation_only(self, client, corpus_manifest):
        sid = create_session(client, corpus_manifest)
        first = client.post(f"/v1/sessions/{sid}/rebuild").json()["generation"]
        second = client.post(f"/v1/sessions/{sid}/rebuild").json()["generation"]
        assert (first, second) == (2, 3)

    def test_third_instance_changes_next_generation(self, client, corpus_manifest):
        doc = empty_manifest(corpus_manifest)
        sid = create_session(client, doc)
        sub = corpus_manifest["instances"][0]["submission"]
        url = f"/v1/sessions/{sid}/submissions/{sub}/instances"
        ann_id = client.post(url, json={"line": 2, "text": "needs three"}).json()["annotation_id"]
        client.post(url, json={"line": 2, "annotation_id": ann_id})
        client.post(f"/v1/sessions/{sid}/rebuild")

        def pattern_score():
            got = client.get(f"/v1/sessions/{sid}/submissions/{sub}/suggest",
                             params={"line": 2}).json()
            return next(s["pattern_score"] for s in got["suggestions"]
                        if s["annotation_id"] == ann_id)

        before = pattern_score()  # two subtrees: below the mining gate
        client.post(url, json={"line": 2, "annotation_id": ann_id})
        client.post(f"/v1/sessions/{sid}/rebuild")
        assert before == 0.0
        assert pattern_score() > 0.0

    def test_suggest_mid_rebuild_serves_old_generation(self, client, corpus_manifest,
                                                       monkeypatch):
        sid = create_session(client, corpus_manifest)
        store = client.app.state.store
        session = store.get(sid)
        old_generation = session.generation
        started = threading.Event()
        release = threading.Event()
        real = service._train_snapshot

        def slow_train(dataset, instances, config):
            started.set()
            release.wait(timeout=10)
            return real(dataset, instances, config)

        monkeypatch.setattr(service, "_train_snapshot", slow_train)
        worker = threading.Thread(
            target=lambda: client.post(f"/v1/sessions/{sid}/rebuild"), daemon=True)
        worker.start()
        assert started.wait(timeout=10)
        inst = corpus_manifest["instances"][0]
        got = client.get(
            f"/v1/sessions/{sid}/submissions/{inst['submission']}/suggest",
            params={"line": inst["line"]}).json()
        assert got["generation"] == old_generation  # old model, not blocked
        release.set()
        worker.join(timeout=10)
        assert store.get(sid).generation == old_generation + 1

    def test_pattern_explosion_is_503_with_annotation_id(self, tmp_path, corpus_manifest):
        app = create_app(tmp_path / "s2", EngineConfig(pattern_cap=3),
                         rebuild_after_instances=1000)
        with TestClient(app) as client:
            response = client.post("/v1/sessions", json=corpus_manifest)
            # initial training already explodes: surfaced as problem detail
            if response.status_code == 200:
                sid = response.json()["session_id"]
                response = client.post(f"/v1/sessions/{sid}/rebuild")
            assert response.status_code == 503
            body = response.json()
            assert body["code"] == "pattern_explosion"
            assert "ann" in body["message"]


class TestCrashRestart:
    def test_restart_replays_log_to_identical_model(self, tmp_path, corpus_manifest):
        data_dir = tmp_path / "sessions"
        app = create_app(data_dir, EngineConfig(), rebuild_after_instances=1000)
        with TestClient(app) as client:
            sid = create_session(client, corpus_manifest)
            sub = corpus_manifest["submissions"][0]["id"]
            for line in (2, 3):
                client.post(f"/v1/sessions/{sid}/submissions/{sub}/instances",
                            json={"line": line, "text": f"note {line}"})
            generation = client.post(f"/v1/sessions/{sid}/rebuild").json()["generation"]
            model_before = app.state.store.get(sid).published[1].to_json_dict()

        reborn = create_app(data_dir, EngineConfig(), rebuild_after_instances=1000)
        with TestClient(reborn) as client:
            session = reborn.state.store.get(sid)
            assert session.generation == generation
            assert session.published[1].to_json_dict() == model_before
            library = client.get(f"/v1/sessions/{sid}/annotations").json()
            assert any(a["text"] == "note 2" for a in library)

    def test_auto_rebuild_triggers_after_threshold(self, tmp_path, corpus_manifest):
        app = create_app(tmp_path / "s3", EngineConfig(), rebuild_after_instances=2)
        with TestClient(app) as client:
            sid = create_session(client, corpus_manifest)
            sub = corpus_manifest["submissions"][0]["id"]
            ann = corpus_manifest["annotations"][0]["id"]
            base = app.state.store.get(sid).generation
            for line in (2, 3):
                client.post(f"/v1/sessions/{sid}/submissions/{sub}/instances",
                            json={"line": line, "annotation_id": ann})
            deadline = time.time() + 10
            while time.time() < deadline:
                if app.state.store.get(sid).generation > base:
                    break
                time.sleep(0.05)
            assert app.state.store.get(sid).generation > base
