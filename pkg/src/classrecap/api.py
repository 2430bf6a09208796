"""HTTP+JSON surface over the session store.

Endpoints and their passcode classes:

    POST /courses               -- open registration, returns both passcodes
    POST /sessions/open         -- public or private passcode
    POST /sessions/{id}/close   -- public or private passcode
    GET  /sessions              -- public or private passcode (X-Passcode)
    POST /ingest                -- public passcode (in body)
    POST /usage                 -- public passcode (in body)
    GET  /summary               -- public passcode (X-Passcode) + X-Student-Token
    GET  /class-view            -- private passcode (X-Passcode)

All timestamps are epoch milliseconds; levels are decimals in [0, 1].
Errors serialize as {"error_code": ..., "message": ...} with stable codes.
"""

from __future__ import annotations

from typing import Optional

from fastapi import FastAPI, Header, Query, Request
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from .errors import ClassrecapError
from .store import IngestBatch, SessionStore

_HTTP_STATUS = {
    "malformed-batch": 400,
    "out-of-range": 400,
    "unknown-strategy": 400,
    "unknown-passcode": 401,
    "authorization": 403,
    "unknown-session": 404,
    "unknown-student": 404,
    "duplicate-course": 409,
    "session-closed": 409,
    "session-open": 409,
    "session-already-open": 409,
    "insufficient-class-data": 409,
    "no-covered-minutes": 409,
    "internal": 500,
}


class CourseRequest(BaseModel):
    code: str
    title: str = ""


class OpenSessionRequest(BaseModel):
    passcode: str
    recording_start_ms: Optional[int] = None
    recording_uri: Optional[str] = None


class CloseSessionRequest(BaseModel):
    passcode: str
    recording_end_ms: Optional[int] = None
    recording_uri: Optional[str] = None


class SampleIn(BaseModel):
    t_ms: int
    level: float
    face: bool = True


class IngestRequest(BaseModel):
    public_passcode: str
    student_token: str
    samples: list[SampleIn] = Field(default_factory=list)


class UsageRequest(BaseModel):
    public_passcode: str
    student_token: str
    session: str
    start_s: int
    end_s: int
    strategy: str = "full"
    at_ms: Optional[int] = None


def _session_json(session) -> dict:
    return {
        "session_id": session.session_id,
        "course_code": session.course_code,
        "recording_start_ms": session.recording_start_ms,
        "recording_end_ms": session.recording_end_ms,
        "recording_uri": session.recording_uri,
        "state": session.state,
        "duration_s": session.duration_s,
    }


def create_app(store: SessionStore) -> FastAPI:
    app = FastAPI(title="classrecap", docs_url=None, redoc_url=None)
    app.state.store = store
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )

    @app.exception_handler(ClassrecapError)
    async def _domain_error(_: Request, exc: ClassrecapError):
        return JSONResponse(
            status_code=_HTTP_STATUS.get(exc.error_code, 500),
            content={"error_code": exc.error_code, "message": exc.message},
        )

    @app.exception_handler(RequestValidationError)
    async def _validation_error(request: Request, exc: RequestValidationError):
        code = "malformed-batch" if request.url.path == "/ingest" else "validation"
        return JSONResponse(
            status_code=400,
            content={"error_code": code, "message": str(exc.errors()[:3])},
        )

    @app.get("/health")
    def health():
        return {"ok": True}

    @app.post("/courses", status_code=201)
    def register_course(req: CourseRequest):
        course = store.register_course(req.code, req.title)
        return {
            "code": course.code,
            "title": course.title,
            "public_passcode": course.public_passcode,
            "private_passcode": course.private_passcode,
            "created_at_ms": course.created_at_ms,
        }

    @app.post("/sessions/open")
    def open_session(req: OpenSessionRequest):
        session = store.open_session(req.passcode, req.recording_start_ms, req.recording_uri)
        course = store.get_course(session.course_code)
        return {**_session_json(session), "title": course.title}

    @app.post("/sessions/{session_id}/close")
    def close_session(session_id: str, req: CloseSessionRequest):
        session = store.close_session(
            session_id, req.passcode, req.recording_end_ms, req.recording_uri
        )
        return _session_json(session)

    @app.get("/sessions")
    def list_sessions(x_passcode: str = Header(default="")):
        course, sessions = store.list_sessions(x_passcode)
        return {
            "course_code": course.code,
            "title": course.title,
            "sessions": [_session_json(s) for s in sessions],
        }

    @app.post("/ingest")
    def ingest(req: IngestRequest):
        ack = store.ingest(
            IngestBatch(
                public_passcode=req.public_passcode,
                student_token=req.student_token,
                samples=[(s.t_ms, s.level, s.face) for s in req.samples],
            )
        )
        return {"accepted_count": ack.accepted_count, "dropped_count": ack.dropped_count}

    @app.post("/usage")
    def log_usage(req: UsageRequest):
        event = store.log_usage(
            req.public_passcode,
            req.student_token,
            req.session,
            req.start_s,
            req.end_s,
            req.strategy,
            req.at_ms,
        )
        return {"event_id": event.event_id}

    @app.get("/summary")
    def summary(
        session: str = Query(...),
        strategy: str = Query(...),
        fallback: bool = Query(default=True),
        x_passcode: str = Header(default=""),
        x_student_token: str = Header(default=""),
    ):
        return store.get_summary(x_passcode, x_student_token, session, strategy, fallback)

    @app.get("/class-view")
    def class_view(session: str = Query(...), x_passcode: str = Header(default="")):
        return store.get_class_view(x_passcode, session)

    return app


def create_app_from_config(config) -> FastAPI:
    return create_app(SessionStore(config.storage_path, config))
