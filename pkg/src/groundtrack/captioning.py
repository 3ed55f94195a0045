"""Caption backends: a deterministic local stub and an HTTP adapter client.

The stub captioner is a pure function of (video id, track id, sampled frame
count, prompt). Its output formula is part of the adapter wire contract: the
adapter service's stub backend computes the same text, so a pipeline run is
identical whether captions come from the local stub or a stub-mode adapter.
"""

from __future__ import annotations

import hashlib
import json
import time
import urllib.error
import urllib.request
from dataclasses import dataclass
from typing import Callable, Protocol

from .export import ClipManifest
from .model import ValidationError

WIRE_VERSION = 1

DEFAULT_CAPTION_PROMPT = (
    "Please describe the activities of the entity highlighted in the bounding "
    "box, including the following aspects: (1) Movement and Direction; (2) "
    "Positional Relations; (3) Body Postures and Gestures; (4) Interactions "
    "with Objects or Others; (5) States and Transitions; (6) Camera/Frame "
    "References."
)


@dataclass(frozen=True)
class PromptConfig:
    prompt_text: str = DEFAULT_CAPTION_PROMPT

    def __post_init__(self) -> None:
        if not self.prompt_text:
            raise ValidationError("caption prompt must be non-empty")

    @property
    def digest(self) -> str:
        return hashlib.sha256(self.prompt_text.encode("utf-8")).hexdigest()[:12]


def stub_caption(video_id: str, track_id: int, frame_count: int, prompt: str) -> str:
    """Deterministic stand-in caption; stable across processes and platforms."""
    prompt_digest = hashlib.sha256(prompt.encode("utf-8")).hexdigest()[:12]
    seed = f"{video_id}|{track_id}|{frame_count}|{prompt_digest}"
    signature = hashlib.blake2b(seed.encode("utf-8"), digest_size=8).hexdigest()
    return (
        f"Entity {track_id} of video {video_id}, observed over {frame_count} "
        f"sampled frames, acting out pattern {signature}."
    )


class CaptionBackend(Protocol):
    backend_id: str

    def caption(self, manifest: ClipManifest, prompt: PromptConfig) -> str: ...


class StubCaptionBackend:
    backend_id = "stub-caption/1"

    def caption(self, manifest: ClipManifest, prompt: PromptConfig) -> str:
        return stub_caption(
            manifest.video_id,
            manifest.track_id,
            len(manifest.sampled_frames),
            prompt.prompt_text,
        )


class AdapterError(RuntimeError):
    """The adapter service could not produce a usable response."""


PostJson = Callable[[str, dict, float], dict]


def _default_post_json(url: str, payload: dict, timeout: float) -> dict:
    body = json.dumps(payload).encode("utf-8")
    request = urllib.request.Request(
        url, data=body, headers={"Content-Type": "application/json"}, method="POST"
    )
    try:
        with urllib.request.urlopen(request, timeout=timeout) as response:
            return json.loads(response.read().decode("utf-8"))
    except urllib.error.HTTPError as exc:
        detail = exc.read().decode("utf-8", errors="replace")[:200]
        raise AdapterError(f"adapter returned HTTP {exc.code}: {detail}") from None
    except (urllib.error.URLError, TimeoutError, json.JSONDecodeError) as exc:
        raise AdapterError(f"adapter request failed: {exc}") from None


class RemoteCaptionBackend:
    """Speaks the adapter's POST /caption endpoint."""

    def __init__(
        self,
        base_url: str,
        timeout: float = 60.0,
        post_json: PostJson = _default_post_json,
    ) -> None:
        self.base_url = base_url.rstrip("/")
        self.timeout = timeout
        self._post_json = post_json
        self.backend_id = f"remote-caption/{self.base_url}"

    def caption(self, manifest: ClipManifest, prompt: PromptConfig) -> str:
        payload = {
            "v": WIRE_VERSION,
            "prompt": prompt.prompt_text,
            "video_id": manifest.video_id,
            "track_id": manifest.track_id,
            "frame_paths": [manifest.frame_path(f) for f in manifest.sampled_frames],
            "overlays": [
                list(manifest.overlays[f].as_tuple()) for f in manifest.sampled_frames
            ],
        }
        response = self._post_json(f"{self.base_url}/caption", payload, self.timeout)
        caption = response.get("caption", "")
        if not isinstance(caption, str):
            raise AdapterError(f"malformed caption payload: {response!r}")
        return caption


class RemoteEmbedBackend:
    """Speaks the adapter's POST /embed endpoint; batches transparently."""

    def __init__(
        self,
        base_url: str,
        dim: int = 384,
        timeout: float = 60.0,
        batch_size: int = 256,
        post_json: PostJson = _default_post_json,
        retries: int = 3,
        backoff: float = 0.5,
    ) -> None:
        self.base_url = base_url.rstrip("/")
        self.dim = dim
        self.timeout = timeout
        self.batch_size = batch_size
        self._post_json = post_json
        self.retries = retries
        self.backoff = backoff
        self.backend_id = f"remote-embed/{self.base_url}"

    def embed(self, texts):
        import numpy as np

        rows = []
        for start in range(0, len(texts), self.batch_size):
            batch = list(texts[start : start + self.batch_size])
            payload = {"v": WIRE_VERSION, "texts": batch}
            response = call_with_retries(
                lambda: self._post_json(f"{self.base_url}/embed", payload, self.timeout),
                retries=self.retries,
                backoff=self.backoff,
            )
            vectors = response.get("embeddings")
            if not isinstance(vectors, list) or len(vectors) != len(batch):
                raise AdapterError(f"malformed embed payload: {type(vectors)}")
            if int(response.get("dim", -1)) != self.dim:
                raise AdapterError(
                    f"adapter embedding dim {response.get('dim')} != expected {self.dim}"
                )
            rows.extend(vectors)
        return np.asarray(rows, dtype=np.float32).reshape(len(texts), self.dim)


def call_with_retries(fn, retries: int = 3, backoff: float = 0.5):
    """Run fn with bounded retry and exponential backoff on AdapterError."""
    last: Exception | None = None
    for attempt in range(retries):
        try:
            return fn()
        except AdapterError as exc:
            last = exc
            if attempt + 1 < retries and backoff > 0:
                time.sleep(backoff * (2**attempt))
    raise last  # type: ignore[misc]
