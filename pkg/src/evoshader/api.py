"""HTTP surface for the studio: JSON request/response plus a one-way
server-sent-event stream per session.

The server ships wrapped full sources; the browser compiles them. The
provider credential is only ever read server-side from the environment.
"""

from __future__ import annotations

import json

from fastapi import FastAPI, HTTPException, Query, Request
from fastapi.responses import PlainTextResponse, StreamingResponse
from pydantic import BaseModel

from .audio import WavFormatError
from .evolution import SelectionError
from .genome import UnknownGenomeError
from .service import BusyError, Session, SessionManager
from .store import StoreError, UnknownSessionError


class CreateSessionRequest(BaseModel):
    session_id: str | None = None


class SelectionRequest(BaseModel):
    genome_id: str
    selected: bool


class EvolveRequest(BaseModel):
    background: bool = False


def create_app(manager: SessionManager, static_dir: str | None = None) -> FastAPI:
    app = FastAPI(title="evoshader", version="0.1.0")
    app.state.manager = manager

    def _session(session_id: str) -> Session:
        try:
            return manager.get(session_id)
        except UnknownSessionError as exc:
            raise HTTPException(status_code=404, detail=str(exc))

    @app.post("/api/sessions")
    def create_session(body: CreateSessionRequest | None = None):
        session = manager.create(body.session_id if body else None)
        return session.view()

    @app.get("/api/sessions/{session_id}")
    def get_population(session_id: str):
        return _session(session_id).view()

    @app.post("/api/sessions/{session_id}/selection")
    def set_selection(session_id: str, body: SelectionRequest):
        session = _session(session_id)
        try:
            changed = session.set_selection(body.genome_id, body.selected)
        except UnknownGenomeError as exc:
            raise HTTPException(status_code=404, detail=str(exc))
        return {"changed": changed, "genome_id": body.genome_id,
                "selected": body.selected}

    @app.post("/api/sessions/{session_id}/evolve")
    def trigger_evolve(session_id: str, body: EvolveRequest | None = None):
        session = _session(session_id)
        background = body.background if body else False
        try:
            evolve_id = session.trigger_evolve(background=background)
        except BusyError as exc:
            raise HTTPException(status_code=409, detail=str(exc))
        except SelectionError as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        return {"evolve_id": evolve_id}

    @app.post("/api/sessions/{session_id}/audio")
    async def upload_audio(
        session_id: str, request: Request, hop: float = Query(default=1 / 60, gt=0)
    ):
        session = _session(session_id)
        payload = await request.body()
        try:
            timeline_id = session.upload_audio(payload, hop_seconds=hop)
        except WavFormatError as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        timeline = session.timelines[timeline_id]
        return {
            "timeline_id": timeline_id,
            "frames": len(timeline),
            "hop_seconds": timeline.hop_seconds,
        }

    @app.get(
        "/api/sessions/{session_id}/timelines/{timeline_id}",
        response_class=PlainTextResponse,
    )
    def get_timeline(session_id: str, timeline_id: str):
        session = _session(session_id)
        if timeline_id not in session.timelines:
            raise HTTPException(status_code=404, detail="unknown timeline")
        return session.timelines[timeline_id].to_text()

    @app.get(
        "/api/sessions/{session_id}/export", response_class=PlainTextResponse
    )
    def download_selected(session_id: str):
        session = _session(session_id)
        try:
            return session.export()
        except StoreError as exc:
            raise HTTPException(status_code=400, detail=str(exc))

    @app.post("/api/sessions/{session_id}/save")
    def save_session(session_id: str):
        path = manager.save(session_id)
        return {"saved": str(path)}

    @app.post("/api/sessions/{session_id}/load")
    def load_session(session_id: str):
        try:
            session = manager.load(session_id)
        except UnknownSessionError as exc:
            raise HTTPException(status_code=404, detail=str(exc))
        return session.view()

    @app.get("/api/sessions/{session_id}/events")
    def event_stream(
        session_id: str,
        after: int = Query(default=0, ge=0),
        wait: bool = Query(default=False),
        timeout: float = Query(default=30.0, gt=0),
    ):
        """SSE stream. With wait=false, replays existing events past
        `after` and closes — the catch-up mode used by tests and
        headless replay. With wait=true, stays open and pushes."""
        session = _session(session_id)

        def generate():
            cursor = after
            import time as _time

            deadline = _time.monotonic() + timeout
            while True:
                events = (
                    session.wait_for_event(cursor, timeout=0.25)
                    if wait
                    else session.events_since(cursor)
                )
                for event in events:
                    cursor = event.seq
                    data = json.dumps(event.to_dict())
                    yield f"id: {event.seq}\nevent: {event.kind}\ndata: {data}\n\n"
                if not wait:
                    return
                if _time.monotonic() > deadline:
                    return
                if not events:
                    yield ": heartbeat\n\n"

        return StreamingResponse(generate(), media_type="text/event-stream")

    if static_dir is not None:
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=static_dir, html=True), name="studio")

    return app
