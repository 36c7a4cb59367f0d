"""HTTP service: upload once, prompt cheaply against the cached result.

Endpoints (all under /v1):
  POST /v1/images                      image bytes -> {session_id, instance_count, timing_ms}
  GET  /v1/sessions/{id}/everything    all instances with compressed-RLE masks
  POST /v1/sessions/{id}/prompt        PromptSpec JSON -> PromptResult JSON
  GET  /v1/sessions/{id}/edges         grayscale PNG edge map

Sessions live in memory with TTL + LRU eviction; the per-session cache is
immutable, so prompt handling is read-only and safely concurrent.
"""

from __future__ import annotations

import logging
import secrets
import threading
import time
from collections import OrderedDict
from dataclasses import dataclass, field

from fastapi import FastAPI, HTTPException, Request, Response
from fastapi.middleware.cors import CORSMiddleware

from .config import ServiceConfig
from .engine import Engine
from .errors import BackendConfigError, InputFormatError, PromptSegError
from .maskgen import SegmentCache, cache_to_dict
from .prompt import EmbeddingMemo, parse_prompt
from .rle import mask_to_coco

log = logging.getLogger("promptseg.service")


@dataclass
class Session:
    session_id: str
    cache: SegmentCache
    created_at: float
    last_used: float
    memo: EmbeddingMemo = field(default_factory=EmbeddingMemo)
    edge_png: bytes | None = None
    edge_lock: threading.Lock = field(default_factory=threading.Lock)


class SessionStore:
    """TTL + LRU session table; safe for concurrent insert/lookup/expire."""

    def __init__(self, capacity: int, ttl_seconds: float, clock=time.monotonic):
        self.capacity = capacity
        self.ttl = ttl_seconds
        self._clock = clock
        self._lock = threading.Lock()
        self._sessions: OrderedDict[str, Session] = OrderedDict()

    def _expire_locked(self) -> None:
        now = self._clock()
        dead = [sid for sid, s in self._sessions.items() if now - s.last_used > self.ttl]
        for sid in dead:
            del self._sessions[sid]

    def put(self, cache: SegmentCache) -> Session:
        session = Session(
            session_id=secrets.token_urlsafe(32),  # 256 bits
            cache=cache,
            created_at=self._clock(),
            last_used=self._clock(),
        )
        with self._lock:
            self._expire_locked()
            while len(self._sessions) >= self.capacity:
                self._sessions.popitem(last=False)
            self._sessions[session.session_id] = session
        return session

    def get(self, session_id: str) -> Session | None:
        with self._lock:
            self._expire_locked()
            session = self._sessions.get(session_id)
            if session is None:
                return None
            session.last_used = self._clock()
            self._sessions.move_to_end(session_id)
            return session

    def __len__(self) -> int:
        with self._lock:
            return len(self._sessions)


def create_app(engine: Engine, cfg: ServiceConfig | None = None) -> FastAPI:
    cfg = cfg or ServiceConfig()
    app = FastAPI(title="promptseg", version="1")
    store = SessionStore(cfg.session_capacity, cfg.session_ttl_seconds)
    app.state.engine = engine
    app.state.sessions = store

    if cfg.cors_origin:
        app.add_middleware(
            CORSMiddleware,
            allow_origins=[cfg.cors_origin],
            allow_methods=["*"],
            allow_headers=["*"],
        )

    def _session_or_404(session_id: str) -> Session:
        session = store.get(session_id)
        if session is None:
            raise HTTPException(status_code=404, detail="unknown or expired session")
        return session

    @app.middleware("http")
    async def access_log(request: Request, call_next):
        start = time.perf_counter()
        response = await call_next(request)
        log.info(
            "%s %s -> %d (%.1f ms)",
            request.method,
            request.url.path,
            response.status_code,
            (time.perf_counter() - start) * 1000.0,
        )
        return response

    @app.post("/v1/images")
    async def upload(request: Request):
        body = await request.body()
        if not body:
            raise HTTPException(status_code=400, detail="empty body")
        if len(body) > cfg.max_upload_bytes:
            raise HTTPException(status_code=413, detail="image too large")
        start = time.perf_counter()
        try:
            cache = engine.segment_everything(body)
        except InputFormatError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        except BackendConfigError as exc:
            raise HTTPException(status_code=503, detail=str(exc)) from exc
        timing_ms = (time.perf_counter() - start) * 1000.0
        session = store.put(cache)
        return {
            "session_id": session.session_id,
            "instance_count": len(cache.instances),
            "width": cache.width,
            "height": cache.height,
            "timing_ms": timing_ms,
        }

    @app.get("/v1/sessions/{session_id}/everything")
    def everything(session_id: str):
        session = _session_or_404(session_id)
        return cache_to_dict(session.cache)

    @app.post("/v1/sessions/{session_id}/prompt")
    async def prompt(session_id: str, request: Request):
        session = _session_or_404(session_id)
        try:
            payload = await request.json()
        except ValueError as exc:
            raise HTTPException(status_code=422, detail=f"invalid JSON: {exc}") from exc
        try:
            spec = parse_prompt(payload)
        except InputFormatError as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc
        start = time.perf_counter()  # prompt-only timing; stage one is never re-run
        try:
            result = engine.prompt(session.cache, spec, memo=session.memo)
        except InputFormatError as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc
        except BackendConfigError as exc:
            raise HTTPException(status_code=503, detail=str(exc)) from exc
        timing_ms = (time.perf_counter() - start) * 1000.0
        return {
            "indices": list(result.indices),
            "scores": list(result.scores),
            "merged_mask": mask_to_coco(result.merged_mask),
            "empty": result.is_empty,
            "timing_ms": timing_ms,
        }

    @app.get("/v1/sessions/{session_id}/edges")
    def edges(session_id: str):
        session = _session_or_404(session_id)
        with session.edge_lock:
            if session.edge_png is None:
                session.edge_png = engine.edges(session.cache).to_png_bytes()
        return Response(content=session.edge_png, media_type="image/png")

    @app.exception_handler(PromptSegError)
    async def promptseg_error(request: Request, exc: PromptSegError):
        raise HTTPException(status_code=500, detail=str(exc))

    return app
