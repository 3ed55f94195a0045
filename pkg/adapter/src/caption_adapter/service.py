"""FastAPI application exposing /caption, /embed and /health.

Error mapping: schema violations are 400, frame-count violations 422,
oversized embed batches 413, backend-not-ready 503.
"""

from __future__ import annotations

from fastapi import FastAPI, HTTPException, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse

from .backends import Backend, StubBackend
from .schemas import (
    DEFAULT_CAPTION_PROMPT,
    EMBED_DIM,
    MAX_EMBED_BATCH,
    MAX_FRAMES,
    CaptionRequest,
    CaptionResponse,
    EmbedRequest,
    EmbedResponse,
    HealthResponse,
)


def create_app(backend: Backend | None = None) -> FastAPI:
    backend = backend if backend is not None else StubBackend()
    app = FastAPI(title="caption-adapter", version="0.1.0")

    @app.exception_handler(RequestValidationError)
    async def malformed(request: Request, exc: RequestValidationError):
        return JSONResponse(status_code=400, content={"detail": exc.errors()[:3]})

    def require_ready() -> None:
        if not backend.ready():
            raise HTTPException(status_code=503, detail="model not loaded")

    @app.get("/health")
    def health() -> HealthResponse:
        if not backend.ready():
            raise HTTPException(status_code=503, detail="loading")
        return HealthResponse(status="ok", backend=backend.name, dim=EMBED_DIM)

    @app.post("/caption")
    def caption(request: CaptionRequest) -> CaptionResponse:
        require_ready()
        frames = request.frames()
        if not (1 <= len(frames) <= MAX_FRAMES):
            raise HTTPException(
                status_code=422,
                detail=f"frame count must be 1..{MAX_FRAMES}, got {len(frames)}",
            )
        if request.overlays is not None and len(request.overlays) != len(frames):
            raise HTTPException(
                status_code=422, detail="overlays must align with frames"
            )
        prompt = request.prompt or DEFAULT_CAPTION_PROMPT
        if not prompt:
            raise HTTPException(status_code=400, detail="prompt must be non-empty")
        text = backend.caption(request.video_id, request.track_id, frames, prompt)
        return CaptionResponse(caption=text, backend=backend.name)

    @app.post("/embed")
    def embed(request: EmbedRequest) -> EmbedResponse:
        require_ready()
        if not request.texts:
            raise HTTPException(status_code=400, detail="texts must be non-empty")
        if any(not t for t in request.texts):
            raise HTTPException(status_code=400, detail="texts may not contain empty strings")
        if len(request.texts) > MAX_EMBED_BATCH:
            raise HTTPException(
                status_code=413,
                detail=f"batch too large: {len(request.texts)} > {MAX_EMBED_BATCH}",
            )
        vectors = backend.embed(request.texts)
        if vectors.shape != (len(request.texts), EMBED_DIM):
            raise HTTPException(
                status_code=500, detail=f"backend produced shape {vectors.shape}"
            )
        return EmbedResponse(
            embeddings=[[float(v) for v in row] for row in vectors],
            dim=EMBED_DIM,
            backend=backend.name,
        )

    return app
