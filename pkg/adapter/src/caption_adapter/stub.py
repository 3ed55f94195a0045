"""Deterministic stub inference: no model weights, no network, no state.

The stub caption is a pure function of (video id, track id, frame count,
prompt) and the stub embeddings are keyed feature hashes of word tokens.
Both formulas are part of the wire contract: clients with a built-in stub
compute the same values, so stub-mode results are identical whether the
adapter is in the loop or not.
"""

from __future__ import annotations

import hashlib
import re

import numpy as np

from .schemas import EMBED_DIM

_TOKEN_RE = re.compile(r"\w+")


def stub_caption(video_id: str, track_id: int, frame_count: int, prompt: str) -> str:
    prompt_digest = hashlib.sha256(prompt.encode("utf-8")).hexdigest()[:12]
    seed = f"{video_id}|{track_id}|{frame_count}|{prompt_digest}"
    signature = hashlib.blake2b(seed.encode("utf-8"), digest_size=8).hexdigest()
    return (
        f"Entity {track_id} of video {video_id}, observed over {frame_count} "
        f"sampled frames, acting out pattern {signature}."
    )


def stub_embed(texts: list[str], dim: int = EMBED_DIM, seed: int = 0) -> np.ndarray:
    """Seeded hash projection; unit-norm float32 rows, stable across processes."""
    out = np.zeros((len(texts), dim), dtype=np.float64)
    prefix = f"{seed}:".encode("utf-8")
    for row, text in enumerate(texts):
        tokens = _TOKEN_RE.findall(text.lower()) or [text]
        h = 0
        for token in tokens:
            digest = hashlib.blake2b(prefix + token.encode("utf-8"), digest_size=8).digest()
            h = int.from_bytes(digest, "little")
            index = h % dim
            sign = 1.0 if (h >> 40) & 1 else -1.0
            out[row, index] += sign
        norm = float(np.sqrt(np.sum(out[row] * out[row])))
        if norm == 0.0:
            out[row, h % dim] = 1.0
            norm = 1.0
        out[row] /= norm
    return out.astype(np.float32)
