"""HTTP service running psychophysics sessions over a generated dataset.

Endpoints (JSON bodies, versioned schemas):

* ``POST /sessions``                  create a session (kind, subject, seed)
* ``GET  /sessions/{id}/next``        next stimulus payload, or an end marker
* ``POST /sessions/{id}/responses``   record one response (idempotent by nonce)
* ``GET  /sessions/{id}/summary``     progress and response counts
* ``GET  /stimuli/{kind}/{path}``     raw stimulus files (PBM frames)

Responses are appended to a per-session JSON-lines log and flushed
before the request is acknowledged; on restart the session cursor is
rebuilt from the log, so an acknowledged response is never lost.
Stimulus payloads never contain ground-truth fields.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import threading
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from fastapi import FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import FileResponse
from pydantic import BaseModel, Field

from .datasets import DatasetManifest

PROTOCOL_VERSION = 1
RESPONSE_TIME_LIMIT = 10.0
SERVER_TIME_CAP = 10.5  # client clocks get half a second of slack

EXPERIMENT_KINDS = {
    1: ("static-image", "click"),
    2: ("dynamic-merged-image", "click"),
    3: ("static-video", "yesno"),
    4: ("dynamic-video", "yesno"),
}


@dataclass(frozen=True)
class DisplayGeometry:
    """Pixel pitch and viewing distance determine the visual angle."""

    pixel_pitch_mm: float = 0.35
    viewing_distance_mm: float = 700.0

    @property
    def degrees_per_pixel(self) -> float:
        return math.degrees(
            2.0 * math.atan(self.pixel_pitch_mm / (2.0 * self.viewing_distance_mm))
        )

    def width_to_visual_angle(self, width_px: float) -> float:
        return math.degrees(
            2.0
            * math.atan(
                width_px * self.pixel_pitch_mm / (2.0 * self.viewing_distance_mm)
            )
        )


@dataclass
class Session:
    session_id: str
    kind: int
    subject: str
    seed: int
    order: list[int]  # permutation of manifest entry indices
    created_at: str
    cursor: int = 0
    nonces: dict[str, int] = field(default_factory=dict)  # nonce -> order position


class CreateSessionRequest(BaseModel):
    kind: int
    subject: str = "anonymous"
    seed: int = 0


class ResponseBody(BaseModel):
    nonce: str = Field(min_length=1, max_length=128)
    stimulus_id: str
    kind: str  # click | yesno
    clicks: list[tuple[float, float]] | None = None
    answer: str | None = None
    elapsed: float = 0.0
    timed_out: bool = False
    dropped_frames: int = 0


def _session_dir(data_root: Path, session_id: str) -> Path:
    return data_root / "sessions" / session_id


class SessionStore:
    """Durable session state: a JSON descriptor plus an append-only log."""

    def __init__(self, data_root: Path):
        self.data_root = Path(data_root)
        self._locks: dict[str, threading.Lock] = {}
        self._guard = threading.Lock()

    def lock(self, session_id: str) -> threading.Lock:
        with self._guard:
            return self._locks.setdefault(session_id, threading.Lock())

    def create(self, kind: int, subject: str, seed: int) -> Session:
        dataset, _ = EXPERIMENT_KINDS[kind]
        manifest = self.manifest(kind)
        rng = np.random.default_rng(seed)
        order = [int(i) for i in rng.permutation(len(manifest.entries))]
        from datetime import datetime, timezone

        session_id = f"s{datetime.now(timezone.utc).strftime('%Y%m%dT%H%M%S')}-{subject}-{os.urandom(4).hex()}"
        session = Session(
            session_id=session_id,
            kind=kind,
            subject=subject,
            seed=seed,
            order=order,
            created_at=datetime.now(timezone.utc).isoformat(),
        )
        sdir = _session_dir(self.data_root, session_id)
        sdir.mkdir(parents=True, exist_ok=False)
        with open(sdir / "session.json", "w") as f:
            json.dump(
                {
                    "protocol_version": PROTOCOL_VERSION,
                    "session_id": session_id,
                    "kind": kind,
                    "dataset": dataset,
                    "subject": subject,
                    "seed": seed,
                    "order": order,
                    "created_at": session.created_at,
                },
                f,
            )
        return session

    def load(self, session_id: str) -> Session:
        sdir = _session_dir(self.data_root, session_id)
        desc_path = sdir / "session.json"
        if not desc_path.exists():
            raise HTTPException(status_code=404, detail="unknown session")
        with open(desc_path) as f:
            desc = json.load(f)
        session = Session(
            session_id=session_id,
            kind=desc["kind"],
            subject=desc["subject"],
            seed=desc["seed"],
            order=desc["order"],
            created_at=desc["created_at"],
        )
        # Replay the response log: the cursor is the number of distinct
        # acknowledged trials.
        log_path = sdir / "responses.jsonl"
        if log_path.exists():
            with open(log_path) as f:
                for line in f:
                    rec = json.loads(line)
                    nonce = rec["nonce"]
                    if nonce not in session.nonces:
                        session.nonces[nonce] = session.cursor
                        session.cursor += 1
        return session

    def manifest(self, kind: int) -> DatasetManifest:
        dataset, _ = EXPERIMENT_KINDS[kind]
        path = self.data_root / dataset / "manifest.json"
        if not path.exists():
            raise HTTPException(
                status_code=404, detail=f"dataset {dataset!r} not generated"
            )
        return DatasetManifest.load(path)

    def append_response(self, session: Session, record: dict) -> None:
        sdir = _session_dir(self.data_root, session.session_id)
        with open(sdir / "responses.jsonl", "a") as f:
            f.write(json.dumps(record) + "\n")
            f.flush()
            os.fsync(f.fileno())


def create_app(data_root: str | Path, cors_origin: str = "*") -> FastAPI:
    store = SessionStore(Path(data_root))
    app = FastAPI(title="dotline experiment service", version=str(PROTOCOL_VERSION))
    app.add_middleware(
        CORSMiddleware,
        allow_origins=[cors_origin] if cors_origin != "*" else ["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )
    app.state.store = store

    @app.post("/sessions")
    def create_session(body: CreateSessionRequest):
        if body.kind not in EXPERIMENT_KINDS:
            raise HTTPException(status_code=422, detail=f"unknown kind {body.kind}")
        session = store.create(body.kind, body.subject, body.seed)
        dataset, task = EXPERIMENT_KINDS[body.kind]
        return {
            "protocol_version": PROTOCOL_VERSION,
            "session_id": session.session_id,
            "kind": body.kind,
            "task": task,
            "n_trials": len(session.order),
            "timeout_s": RESPONSE_TIME_LIMIT,
        }

    @app.get("/sessions/{session_id}/next")
    def next_stimulus(session_id: str):
        with store.lock(session_id):
            session = store.load(session_id)
            dataset, task = EXPERIMENT_KINDS[session.kind]
            if session.cursor >= len(session.order):
                return {"end_of_run": True, "trial": session.cursor}
            manifest = store.manifest(session.kind)
            entry = manifest.entries[session.order[session.cursor]]
            payload = {
                "end_of_run": False,
                "trial": session.cursor,
                "n_trials": len(session.order),
                "stimulus_id": entry.stimulus_id,
                "task": task,
                "timeout_s": RESPONSE_TIME_LIMIT,
            }
            if entry.frame_count > 1:
                payload["fps"] = entry.fps
                payload["frames"] = [
                    f"/stimuli/{dataset}/{entry.path}/f{t:04d}.pbm"
                    for t in range(entry.frame_count)
                ]
            else:
                payload["image"] = f"/stimuli/{dataset}/{entry.path}"
            return payload

    @app.post("/sessions/{session_id}/responses")
    def record_response(session_id: str, body: ResponseBody):
        if body.kind not in ("click", "yesno"):
            raise HTTPException(status_code=422, detail="kind must be click|yesno")
        if body.kind == "yesno" and body.answer not in ("yes", "no", "timeout"):
            raise HTTPException(status_code=422, detail="bad yes/no answer")
        if body.kind == "click" and body.clicks is not None and len(body.clicks) > 2:
            raise HTTPException(status_code=422, detail="at most two clicks")
        if body.elapsed > SERVER_TIME_CAP:
            raise HTTPException(
                status_code=422, detail=f"elapsed exceeds the {SERVER_TIME_CAP}s cap"
            )
        with store.lock(session_id):
            session = store.load(session_id)
            if body.nonce in session.nonces:
                return {"ok": True, "duplicate": True, "trial": session.nonces[body.nonce]}
            if session.cursor >= len(session.order):
                raise HTTPException(status_code=409, detail="session exhausted")
            manifest = store.manifest(session.kind)
            current = manifest.entries[session.order[session.cursor]]
            if body.stimulus_id != current.stimulus_id:
                raise HTTPException(
                    status_code=409,
                    detail=f"stale stimulus {body.stimulus_id!r}; "
                    f"current is {current.stimulus_id!r}",
                )
            record = {
                "protocol_version": PROTOCOL_VERSION,
                "session_id": session_id,
                "trial": session.cursor,
                "nonce": body.nonce,
                "stimulus_id": body.stimulus_id,
                "kind": body.kind,
                "clicks": body.clicks,
                "answer": body.answer,
                "elapsed": body.elapsed,
                "timed_out": body.timed_out,
                "dropped_frames": body.dropped_frames,
            }
            store.append_response(session, record)
            return {"ok": True, "duplicate": False, "trial": session.cursor}

    @app.get("/sessions/{session_id}/summary")
    def summary(session_id: str):
        with store.lock(session_id):
            session = store.load(session_id)
            return {
                "session_id": session_id,
                "kind": session.kind,
                "subject": session.subject,
                "responses": session.cursor,
                "n_trials": len(session.order),
                "done": session.cursor >= len(session.order),
            }

    @app.get("/stimuli/{kind}/{path:path}")
    def stimulus_file(kind: str, path: str):
        base = (store.data_root / kind).resolve()
        full = (base / path).resolve()
        if not str(full).startswith(str(base)) or not full.is_file():
            raise HTTPException(status_code=404, detail="no such stimulus")
        return FileResponse(full, media_type="image/x-portable-bitmap")

    return app


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="dotline-serve")
    parser.add_argument("--port", type=int, default=8321)
    parser.add_argument("--data-root", required=True)
    parser.add_argument("--origin", default="*", help="CORS origin for the UI")
    args = parser.parse_args(argv)
    import uvicorn

    uvicorn.run(
        create_app(args.data_root, args.origin), host="127.0.0.1", port=args.port
    )
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
