"""FastAPI app exposing a running scenario for operators.

Endpoints:
    GET  /status  -> current tick, until, rt factor, run state
    POST /events  -> inject an external event (202, or 409 when rt is off)
    GET  /trace   -> server-sent event stream of trace records; clients
                     resume via Last-Event-ID or ?after=<seq>
"""

from __future__ import annotations

from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse, StreamingResponse
from fastapi.staticfiles import StaticFiles

from ..errors import ExternalEventError
from .control import RunController
from .models import InjectRequest, InjectResponse, StatusResponse

STREAM_POLL_SECONDS = 0.25


def create_app(controller: RunController, console_dir: str | None = None) -> FastAPI:
    app = FastAPI(title="cosim control endpoint", version="0.1.0")
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )

    @app.get("/status", response_model=StatusResponse)
    def status() -> StatusResponse:
        return StatusResponse(**controller.status_snapshot())

    @app.post("/events", response_model=InjectResponse, status_code=202)
    def inject(body: InjectRequest):
        try:
            scheduled = controller.inject(body.sid, body.time)
        except ExternalEventError as exc:
            code = 404 if exc.reason == "unknown_sid" else 409
            return JSONResponse(
                status_code=code, content={"detail": str(exc), "reason": exc.reason}
            )
        return InjectResponse(sid=body.sid, requested_time=body.time, scheduled_tick=scheduled)

    @app.get("/trace")
    def trace(request: Request, after: int = 0):
        last_id = request.headers.get("last-event-id")
        if last_id is not None:
            try:
                after = max(after, int(last_id))
            except ValueError:
                pass

        def stream(after_seq: int):
            while True:
                records = controller.trace.wait_for_more(after_seq, STREAM_POLL_SECONDS)
                for record in records:
                    yield f"id: {record.seq}\ndata: {record.to_json_line()}\n\n"
                    after_seq = record.seq
                if not records and controller.trace.closed:
                    yield "event: end\ndata: {}\n\n"
                    return

        return StreamingResponse(
            stream(after),
            media_type="text/event-stream",
            headers={"Cache-Control": "no-cache", "X-Accel-Buffering": "no"},
        )

    if console_dir and Path(console_dir).is_dir():
        app.mount("/console", StaticFiles(directory=console_dir, html=True), name="console")

    return app
