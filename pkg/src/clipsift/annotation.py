"""Listening-test sessions, judgment log, and the HTTP annotation service.

A session is a with-replacement sample of clips from the dataset under
audit.  The annotator steps through the sample strictly in order; each
item shows the assigned label, its class description, and up to three
reference examples drawn from the clean counterpart manifest (never from
the dataset being audited).  Judgments land in an append-only JSONL log;
replaying the log reconstructs every session cursor.  Estimates pool all
judgments into a category table and defer to the noise-rate arithmetic.
"""

from __future__ import annotations

import json
import threading
import time
import uuid
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Mapping, Optional, Union

import numpy as np
from fastapi import FastAPI, HTTPException, Request
from fastapi.responses import FileResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from .curation import DatasetManifest
from .noise import CATEGORIES, JudgmentTable, NoiseEstimate, noise_breakdown

MAX_REFERENCE_EXAMPLES = 3


class AnnotationError(Exception):
    """Base class for annotation failures."""


class UnknownSessionError(AnnotationError, KeyError):
    def __str__(self) -> str:
        return self.args[0] if self.args else ""


class ConflictError(AnnotationError):
    """Judgment position does not match the session cursor."""


@dataclass
class Session:
    session_id: str
    annotator_id: str
    sample: tuple[str, ...]
    cursor: int = 0

    @property
    def done(self) -> bool:
        return self.cursor >= len(self.sample)


@dataclass(frozen=True)
class Judgment:
    session_id: str
    position: int
    clip_id: str
    category: str
    timestamp: float


@dataclass
class AnnotationStore:
    """Append-only persistence: sessions.jsonl + judgments.jsonl."""

    root: Path
    clock: Callable[[], float] = time.time
    sessions: dict[str, Session] = field(default_factory=dict)
    judgments: list[Judgment] = field(default_factory=list)

    def __post_init__(self):
        self.root = Path(self.root)
        self.root.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()
        self._sessions_path = self.root / "sessions.jsonl"
        self._judgments_path = self.root / "judgments.jsonl"
        self._replay()

    def _replay(self) -> None:
        if self._sessions_path.exists():
            with open(self._sessions_path, encoding="utf-8") as f:
                for line in f:
                    if not line.strip():
                        continue
                    d = json.loads(line)
                    self.sessions[d["session_id"]] = Session(
                        d["session_id"], d["annotator_id"], tuple(d["sample"])
                    )
        if self._judgments_path.exists():
            with open(self._judgments_path, encoding="utf-8") as f:
                for line in f:
                    if not line.strip():
                        continue
                    d = json.loads(line)
                    judgment = Judgment(
                        d["session_id"],
                        int(d["position"]),
                        d["clip_id"],
                        d["category"],
                        float(d["timestamp"]),
                    )
                    self.judgments.append(judgment)
                    session = self.sessions.get(judgment.session_id)
                    if session is not None and judgment.position == session.cursor:
                        session.cursor += 1

    def add_session(self, session: Session) -> None:
        with self._lock:
            with open(self._sessions_path, "a", encoding="utf-8") as f:
                f.write(
                    json.dumps(
                        {
                            "session_id": session.session_id,
                            "annotator_id": session.annotator_id,
                            "sample": list(session.sample),
                        },
                        sort_keys=True,
                    )
                    + "\n"
                )
            self.sessions[session.session_id] = session

    def session(self, session_id: str) -> Session:
        try:
            return self.sessions[session_id]
        except KeyError:
            raise UnknownSessionError(f"unknown session {session_id!r}") from None

    def append_judgment(self, session_id: str, position: int, category: str) -> Session:
        """Record one judgment at the session cursor; idempotent on exact repeats."""
        if category not in CATEGORIES:
            raise ValueError(f"category must be one of {CATEGORIES}, got {category!r}")
        with self._lock:
            session = self.session(session_id)
            if position == session.cursor - 1:
                last = next(
                    (
                        j
                        for j in reversed(self.judgments)
                        if j.session_id == session_id and j.position == position
                    ),
                    None,
                )
                if last is not None and last.category == category:
                    return session  # exact duplicate: acknowledged, no new row
                raise ConflictError(
                    f"position {position} already judged with {last.category if last else '?'!r}"
                )
            if position != session.cursor:
                raise ConflictError(
                    f"expected position {session.cursor}, got {position}"
                )
            judgment = Judgment(
                session_id,
                position,
                session.sample[position],
                category,
                float(self.clock()),
            )
            with open(self._judgments_path, "a", encoding="utf-8") as f:
                f.write(
                    json.dumps(
                        {
                            "session_id": judgment.session_id,
                            "position": judgment.position,
                            "clip_id": judgment.clip_id,
                            "category": judgment.category,
                            "timestamp": judgment.timestamp,
                        },
                        sort_keys=True,
                    )
                    + "\n"
                )
            self.judgments.append(judgment)
            session.cursor += 1
            return session

    def tally(self) -> dict[str, int]:
        counts = dict.fromkeys(CATEGORIES, 0)
        for judgment in self.judgments:
            counts[judgment.category] += 1
        return counts


class AnnotationService:
    """Session orchestration over an audit manifest and its clean reference."""

    def __init__(
        self,
        store: AnnotationStore,
        audit_manifest: DatasetManifest,
        reference_manifest: Optional[DatasetManifest] = None,
        descriptions: Optional[Mapping[str, str]] = None,
        max_examples: int = MAX_REFERENCE_EXAMPLES,
    ):
        self.store = store
        self.audit_entries = list(audit_manifest.entries)
        if not self.audit_entries:
            raise AnnotationError("audit manifest is empty")
        self._label_by_clip = {e.clip_id: e.label_id for e in self.audit_entries}
        self.label_names = audit_manifest.label_names()
        self.descriptions = dict(descriptions or {})
        self.max_examples = max_examples
        # Reference examples come from the clean counterpart, never from
        # the dataset under audit; deterministic pick of the first ids.
        self.reference_examples: dict[str, list[str]] = {}
        if reference_manifest is not None:
            self.label_names.update(reference_manifest.label_names())
            for entry in sorted(reference_manifest.entries, key=lambda e: e.clip_id):
                examples = self.reference_examples.setdefault(entry.label_id, [])
                if len(examples) < max_examples:
                    examples.append(entry.clip_id)

    def create_session(
        self, annotator_id: str, sample_size: int, seed: int
    ) -> Session:
        """Draw sample_size clips uniformly with replacement (PCG64(seed))."""
        if sample_size < 1:
            raise ValueError("sample_size must be at least 1")
        rng = np.random.default_rng(seed)
        indices = rng.integers(0, len(self.audit_entries), size=sample_size)
        sample = tuple(self.audit_entries[int(i)].clip_id for i in indices)
        session = Session(uuid.uuid4().hex, annotator_id, sample)
        self.store.add_session(session)
        return session

    def next_item(self, session_id: str) -> Optional[dict]:
        """Payload for the next unjudged position, or None when done."""
        session = self.store.session(session_id)
        if session.done:
            return None
        clip_id = session.sample[session.cursor]
        label_id = self._label_by_clip[clip_id]
        return {
            "position": session.cursor,
            "total": len(session.sample),
            "clip_id": clip_id,
            "audio_url": f"/audio/{clip_id}.wav",
            "label_id": label_id,
            "label_name": self.label_names.get(label_id, label_id),
            "description": self.descriptions.get(label_id, ""),
            "examples": [
                {"clip_id": ref, "audio_url": f"/audio/{ref}.wav"}
                for ref in self.reference_examples.get(label_id, [])
            ],
            "categories": list(CATEGORIES),
        }

    def record_judgment(self, session_id: str, position: int, category: str) -> dict:
        session = self.store.append_judgment(session_id, position, category)
        return {"session_id": session_id, "cursor": session.cursor, "done": session.done}

    def compute_estimate(self) -> tuple[JudgmentTable, NoiseEstimate]:
        """Pool all judgments across sessions and derive the noise rates."""
        counts = self.store.tally()
        if sum(counts.values()) == 0:
            raise AnnotationError("no judgments recorded yet")
        table = JudgmentTable.from_counts(counts)
        return table, noise_breakdown(table)


class SessionRequest(BaseModel):
    annotator_id: str
    sample_size: int = 100
    seed: int = 0


class JudgmentRequest(BaseModel):
    position: int
    category: str


def create_app(
    service: AnnotationService,
    audio_dir: Optional[Union[str, Path]] = None,
    static_dir: Optional[Union[str, Path]] = None,
    token: Optional[str] = None,
) -> FastAPI:
    """FastAPI app exposing the annotation endpoints.

    POST /sessions, GET /sessions/{id}/next, POST /sessions/{id}/judgments,
    GET /estimate; WAV files under /audio and the UI bundle at /.
    """
    app = FastAPI(title="clipsift annotation service")

    def check_token(request: Request) -> None:
        if token is not None and request.headers.get("x-auth-token") != token:
            raise HTTPException(status_code=401, detail="invalid or missing token")

    @app.post("/sessions")
    def create_session(body: SessionRequest, request: Request):
        check_token(request)
        session = service.create_session(body.annotator_id, body.sample_size, body.seed)
        return {
            "session_id": session.session_id,
            "annotator_id": session.annotator_id,
            "total": len(session.sample),
            "cursor": session.cursor,
        }

    @app.get("/sessions/{session_id}/next")
    def next_item(session_id: str, request: Request):
        check_token(request)
        try:
            item = service.next_item(session_id)
        except UnknownSessionError as exc:
            raise HTTPException(status_code=404, detail=str(exc))
        if item is None:
            return {"done": True}
        return {"done": False, "item": item}

    @app.post("/sessions/{session_id}/judgments")
    def record_judgment(session_id: str, body: JudgmentRequest, request: Request):
        check_token(request)
        try:
            return service.record_judgment(session_id, body.position, body.category)
        except UnknownSessionError as exc:
            raise HTTPException(status_code=404, detail=str(exc))
        except ConflictError as exc:
            raise HTTPException(status_code=409, detail=str(exc))
        except ValueError as exc:
            raise HTTPException(status_code=422, detail=str(exc))

    @app.get("/estimate")
    def estimate(request: Request):
        check_token(request)
        try:
            table, noise_estimate = service.compute_estimate()
        except AnnotationError as exc:
            raise HTTPException(status_code=409, detail=str(exc))
        except ValueError as exc:
            raise HTTPException(status_code=409, detail=str(exc))
        return {
            "table": {**table.proportions(), "n": table.n},
            "estimate": noise_estimate.to_json_dict(),
        }

    if audio_dir is not None:
        audio_root = Path(audio_dir)

        @app.get("/audio/{filename}")
        def audio(filename: str, request: Request):
            check_token(request)
            path = (audio_root / filename).resolve()
            if audio_root.resolve() not in path.parents or not path.exists():
                raise HTTPException(status_code=404, detail="no such file")
            return FileResponse(path, media_type="audio/wav")

    if static_dir is not None:
        app.mount("/", StaticFiles(directory=str(static_dir), html=True), name="ui")

    return app
