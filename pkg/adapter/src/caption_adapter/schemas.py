"""Wire schemas, versioned with a `v` field; identical across backends."""

from __future__ import annotations

from pydantic import BaseModel, Field

WIRE_VERSION = 1
EMBED_DIM = 384
MAX_FRAMES = 24
MAX_EMBED_BATCH = 256

DEFAULT_CAPTION_PROMPT = (
    "Please describe the activities of the entity highlighted in the bounding "
    "box, including the following aspects: (1) Movement and Direction; (2) "
    "Positional Relations; (3) Body Postures and Gestures; (4) Interactions "
    "with Objects or Others; (5) States and Transitions; (6) Camera/Frame "
    "References."
)


class CaptionRequest(BaseModel):
    v: int = WIRE_VERSION
    prompt: str | None = None
    video_id: str = "video"
    track_id: int = 0
    frame_paths: list[str] | None = None
    frames_b64: list[str] | None = None
    overlays: list[list[float]] | None = None

    def frames(self) -> list[str]:
        if self.frame_paths is not None:
            return self.frame_paths
        return self.frames_b64 or []


class CaptionResponse(BaseModel):
    v: int = WIRE_VERSION
    caption: str
    backend: str


class EmbedRequest(BaseModel):
    v: int = WIRE_VERSION
    texts: list[str] = Field(default_factory=list)


class EmbedResponse(BaseModel):
    v: int = WIRE_VERSION
    embeddings: list[list[float]]
    dim: int = EMBED_DIM
    backend: str


class HealthResponse(BaseModel):
    v: int = WIRE_VERSION
    status: str
    backend: str
    dim: int = EMBED_DIM
