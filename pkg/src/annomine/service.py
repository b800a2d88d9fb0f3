"""Live review sessions over HTTP: record annotations, rebuild, suggest.

A session wraps one exercise manifest. Its instance log is append-only and
persisted as JSON lines next to a copy of the submission sources, so a
restart replays the log and reaches the same model content. Suggestions
are always served from the latest fully built model generation: rebuilds
train on a snapshot of the log and publish the new model with a single
reference swap, never blocking readers.
"""
from __future__ import annotations

import json
import logging
import threading
import uuid
from pathlib import Path
from typing import Optional

from fastapi import FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from .config import EngineConfig
from .datasets import DanglingReference, ExerciseDataset, SchemaError, dataset_from_manifest
from .ingest import extract_line_context
from .miner import PatternExplosion
from .model import (
    Annotation,
    AnnotationInstance,
    AnnotationModel,
    EmptyTrainingSet,
    train,
)

log = logging.getLogger(__name__)


class ServiceError(Exception):
    status = 500
    code = "internal"

    def __init__(self, message: str):
        super().__init__(message)
        self.message = message


class UnknownSession(ServiceError):
    status = 404
    code = "unknown_session"


class UnknownSubmission(ServiceError):
    status = 404
    code = "unknown_submission"


class BadLine(ServiceError):
    status = 400
    code = "bad_line"


class BadRequest(ServiceError):
    status = 400
    code = "bad_request"


def _train_snapshot(dataset: ExerciseDataset, instances: list[AnnotationInstance],
                    config: EngineConfig) -> AnnotationModel:
    """Full retrain on an instance-log snapshot. Patchable in tests."""
    if not instances:
        return AnnotationModel.empty(config)
    try:
        return train(instances, dataset.submission_map, config)
    except EmptyTrainingSet:
        return AnnotationModel.empty(config)


class ReviewSession:
    """One exercise under review; all writes go through self.lock."""

    def __init__(self, session_id: str, dataset: ExerciseDataset,
                 directory: Path, config: EngineConfig):
        self.id = session_id
        self.dataset = dataset
        self.directory = directory
        self.config = config
        self.annotations: dict[str, Annotation] = {a.id: a for a in dataset.annotations}
        self.instances: list[AnnotationInstance] = list(dataset.instances)
        self.lock = threading.Lock()
        self.rebuild_lock = threading.Lock()
        self.published: tuple[int, AnnotationModel] = (0, AnnotationModel.empty(config))
        self.dirty = 0
        self.instance_seq = 0
        self.minted_seq = 0
        self.last_rebuild_size: Optional[int] = None

    @property
    def generation(self) -> int:
        return self.published[0]

    def submission(self, submission_id: str):
        sub = self.dataset.submission_map.get(submission_id)
        if sub is None:
            raise UnknownSubmission(f"submission {submission_id!r} not in session")
        return sub

    def append_event(self, event: dict) -> None:
        with (self.directory / "events.jsonl").open("a", encoding="utf-8") as handle:
            handle.write(json.dumps(event, sort_keys=True) + "\n")


class SessionStore:
    def __init__(self, data_dir: Path, config: EngineConfig,
                 rebuild_after_instances: int = 10):
        self.data_dir = Path(data_dir)
        self.data_dir.mkdir(parents=True, exist_ok=True)
        self.config = config
        self.rebuild_after_instances = rebuild_after_instances
        self.sessions: dict[str, ReviewSession] = {}
        self._lock = threading.Lock()
        for manifest_path in sorted(self.data_dir.glob("*/manifest.json")):
            try:
                self._load_session(manifest_path.parent)
            except Exception:
                log.exception("could not restore session from %s", manifest_path.parent)

    def get(self, session_id: str) -> ReviewSession:
        session = self.sessions.get(session_id)
        if session is None:
            raise UnknownSession(f"no session {session_id!r}")
        return session

    def create_session(self, manifest: dict) -> ReviewSession:
        dataset = dataset_from_manifest(manifest, base_dir=Path.cwd())
        session_id = uuid.uuid4().hex
        directory = self.data_dir / session_id
        directory.mkdir(parents=True)
        (directory / "manifest.json").write_text(
            json.dumps(manifest, indent=2) + "\n", encoding="utf-8")
        (directory / "sources.json").write_text(
            json.dumps({s.id: s.source for s in dataset.submissions}, sort_keys=True) + "\n",
            encoding="utf-8")
        session = ReviewSession(session_id, dataset, directory, self.config)
        if session.instances:
            model = _train_snapshot(dataset, session.instances, self.config)
            session.published = (1, model)
            session.last_rebuild_size = len(session.instances)
            session.append_event({"type": "rebuild", "generation": 1,
                                  "instances": len(session.instances)})
        with self._lock:
            self.sessions[session_id] = session
        return session

    def _load_session(self, directory: Path) -> None:
        manifest = json.loads((directory / "manifest.json").read_text(encoding="utf-8"))
        sources = json.loads((directory / "sources.json").read_text(encoding="utf-8"))
        dataset = dataset_from_manifest(manifest, sources=sources)
        session = ReviewSession(directory.name, dataset, directory, self.config)
        last_gen, last_size = 0, None
        events_path = directory / "events.jsonl"
        if events_path.exists():
            for line in events_path.read_text(encoding="utf-8").splitlines():
                if not line.strip():
                    continue
                event = json.loads(line)
                if event["type"] == "annotation":
                    session.annotations[event["id"]] = Annotation(event["id"], event["text"])
                    session.minted_seq += 1
                elif event["type"] == "instance":
                    session.instances.append(AnnotationInstance(
                        event["annotation"], event["submission"], event["line"]))
                    session.instance_seq += 1
                elif event["type"] == "rebuild":
                    last_gen = event["generation"]
                    last_size = event["instances"]
        if session.instances:
            model = _train_snapshot(dataset, session.instances, self.config)
            if last_size == len(session.instances):
                generation = last_gen
            else:
                generation = last_gen + 1
                session.append_event({"type": "rebuild", "generation": generation,
                                      "instances": len(session.instances)})
            session.published = (generation, model)
            session.last_rebuild_size = len(session.instances)
        self.sessions[session.id] = session

    def record_instance(self, session: ReviewSession, submission_id: str,
                        line: int, annotation_id: str | None,
                        text: str | None) -> dict:
        submission = session.submission(submission_id)
        line_count = submission.source.count("\n") + 1
        if not isinstance(line, int) or not 1 <= line <= line_count:
            raise BadLine(f"line {line!r} outside submission {submission_id!r}")
        with session.lock:
            if annotation_id is not None:
                if annotation_id not in session.annotations:
                    raise BadRequest(f"unknown annotation {annotation_id!r}")
            else:
                if not text:
                    raise BadRequest("need either annotation_id or text")
                session.minted_seq += 1
                annotation_id = f"new-{session.minted_seq}"
                while annotation_id in session.annotations:
                    session.minted_seq += 1
                    annotation_id = f"new-{session.minted_seq}"
                session.annotations[annotation_id] = Annotation(annotation_id, text)
                session.append_event({"type": "annotation", "id": annotation_id, "text": text})
            session.instance_seq += 1
            instance_id = f"i-{session.instance_seq}"
            session.instances.append(AnnotationInstance(annotation_id, submission_id, line))
            session.append_event({"type": "instance", "id": instance_id,
                                  "submission": submission_id, "line": line,
                                  "annotation": annotation_id})
            session.dirty += 1
            needs_rebuild = session.dirty >= self.rebuild_after_instances
        context = extract_line_context(submission.tree, line - 1)
        if needs_rebuild:
            threading.Thread(target=self._background_rebuild, args=(session,),
                             daemon=True).start()
        return {
            "instance_id": instance_id,
            "annotation_id": annotation_id,
            "context_extracted": context is not None,
        }

    def rebuild(self, session: ReviewSession) -> int:
        """Retrain on the current log prefix and publish atomically."""
        with session.rebuild_lock:
            with session.lock:
                snapshot = list(session.instances)
                dirty_at_start = session.dirty
                target_generation = session.published[0] + 1
            model = _train_snapshot(session.dataset, snapshot, self.config)
            with session.lock:
                session.published = (target_generation, model)
                session.dirty = max(0, session.dirty - dirty_at_start)
                session.last_rebuild_size = len(snapshot)
                session.append_event({"type": "rebuild", "generation": target_generation,
                                      "instances": len(snapshot)})
            return target_generation

    def _background_rebuild(self, session: ReviewSession) -> None:
        try:
            self.rebuild(session)
        except PatternExplosion:
            log.exception("auto-rebuild aborted for session %s", session.id)
        except Exception:
            log.exception("auto-rebuild failed for session %s", session.id)


class InstanceBody(BaseModel):
    line: int
    annotation_id: str | None = None
    text: str | None = None


def create_app(data_dir: str | Path, config: EngineConfig | None = None,
               rebuild_after_instances: int = 10) -> FastAPI:
    store = SessionStore(Path(data_dir), config or EngineConfig(),
                         rebuild_after_instances)
    app = FastAPI(title="annotation suggestion service")
    app.add_middleware(CORSMiddleware, allow_origins=["*"], allow_methods=["*"],
                       allow_headers=["*"])
    app.state.store = store

    def problem(status: int, code: str, message: str) -> JSONResponse:
        return JSONResponse(status_code=status,
                            content={"status": status, "code": code, "message": message})

    @app.exception_handler(ServiceError)
    async def on_service_error(_request: Request, err: ServiceError):
        return problem(err.status, err.code, err.message)

    @app.exception_handler(SchemaError)
    async def on_schema_error(_request: Request, err: SchemaError):
        return problem(400, "schema_error", str(err))

    @app.exception_handler(DanglingReference)
    async def on_dangling(_request: Request, err: DanglingReference):
        return problem(400, "dangling_reference", str(err))

    @app.exception_handler(PatternExplosion)
    async def on_explosion(_request: Request, err: PatternExplosion):
        return problem(503, "pattern_explosion", str(err))

    @app.post("/v1/sessions")
    def create_session(manifest: dict):
        session = store.create_session(manifest)
        return {"session_id": session.id}

    @app.get("/v1/sessions/{session_id}/submissions")
    def list_submissions(session_id: str):
        session = store.get(session_id)
        with session.lock:
            reviewed = {i.submission_id for i in session.instances}
        return [
            {"id": s.id, "reviewed": s.id in reviewed}
            for s in session.dataset.submissions
        ]

    @app.get("/v1/sessions/{session_id}/submissions/{submission_id}/source")
    def get_source(session_id: str, submission_id: str):
        session = store.get(session_id)
        submission = session.submission(submission_id)
        return {"source": submission.source, "grammar": session.dataset.grammar}

    @app.get("/v1/sessions/{session_id}/submissions/{submission_id}/suggest")
    def suggest(session_id: str, submission_id: str, line: int, top: int = 5):
        session = store.get(session_id)
        submission = session.submission(submission_id)
        line_count = submission.source.count("\n") + 1
        if not 1 <= line <= line_count:
            raise BadLine(f"line {line!r} outside submission {submission_id!r}")
        generation, model = session.published
        context = extract_line_context(submission.tree, line - 1)
        if context is None:
            return {"generation": generation, "suggestions": [],
                    "reason": "no context on this line"}
        suggestions = [
            {
                "annotation_id": s.annotation_id,
                "text": session.annotations[s.annotation_id].text
                if s.annotation_id in session.annotations else "",
                "combined": float(s.combined),
                "pattern_score": float(s.pattern_score),
                "unique_fraction": float(s.unique_fraction),
            }
            for s in model.rank(context, top_k=top)
        ]
        return {"generation": generation, "suggestions": suggestions}

    @app.post("/v1/sessions/{session_id}/submissions/{submission_id}/instances")
    def record_instance(session_id: str, submission_id: str, body: InstanceBody):
        session = store.get(session_id)
        return store.record_instance(session, submission_id, body.line,
                                     body.annotation_id, body.text)

    @app.post("/v1/sessions/{session_id}/rebuild")
    def rebuild(session_id: str):
        session = store.get(session_id)
        return {"generation": store.rebuild(session)}

    @app.get("/v1/sessions/{session_id}/annotations")
    def annotations(session_id: str):
        session = store.get(session_id)
        with session.lock:
            return [{"id": a.id, "text": a.text} for a in session.annotations.values()]

    return app
