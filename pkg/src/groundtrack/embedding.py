"""Text embedding backends and similarity.

The built-in embedder feature-hashes lowercased word tokens into a
384-dimensional unit vector. It needs no model weights or network and is
bit-stable across processes and platforms (keyed BLAKE2 token hashing,
float32 output), which keeps the whole pipeline runnable and testable
offline. A remote backend with real sentence embeddings can be swapped in
behind the same interface.
"""

from __future__ import annotations

import hashlib
import re
from typing import Protocol, Sequence

import numpy as np

from .model import EMBED_DIM, ValidationError

_TOKEN_RE = re.compile(r"\w+")


class Embedder(Protocol):
    dim: int
    backend_id: str

    def embed(self, texts: Sequence[str]) -> np.ndarray: ...


class HashingEmbedder:
    """Seeded feature hashing of word tokens, L2-normalized, float32."""

    def __init__(self, dim: int = EMBED_DIM, seed: int = 0) -> None:
        if dim < 1:
            raise ValidationError(f"embedding dim must be >= 1, got {dim}")
        self.dim = dim
        self.seed = seed
        self.backend_id = f"hash-embed/1:dim={dim}:seed={seed}"

    def _tokenize(self, text: str) -> list[str]:
        tokens = _TOKEN_RE.findall(text.lower())
        # Token-free strings still need a stable non-zero vector.
        return tokens if tokens else [text]

    def embed(self, texts: Sequence[str]) -> np.ndarray:
        out = np.zeros((len(texts), self.dim), dtype=np.float64)
        prefix = f"{self.seed}:".encode("utf-8")
        for row, text in enumerate(texts):
            if not text:
                raise ValidationError("cannot embed an empty string")
            for token in self._tokenize(text):
                digest = hashlib.blake2b(
                    prefix + token.encode("utf-8"), digest_size=8
                ).digest()
                h = int.from_bytes(digest, "little")
                index = h % self.dim
                sign = 1.0 if (h >> 40) & 1 else -1.0
                out[row, index] += sign
            norm = float(np.sqrt(np.sum(out[row] * out[row])))
            if norm == 0.0:
                # Possible only if signed token counts cancel exactly; nudge
                # deterministically so the result stays a valid direction.
                out[row, h % self.dim] = 1.0
                norm = 1.0
            out[row] /= norm
        return out.astype(np.float32)


def check_embedding(vec: np.ndarray, normalized: bool = False) -> np.ndarray:
    """Validate a 384-vector; optionally require unit norm within 1e-6."""
    arr = np.asarray(vec, dtype=np.float64).reshape(-1)
    if arr.shape[0] != EMBED_DIM:
        raise ValidationError(f"embedding has dim {arr.shape[0]}, expected {EMBED_DIM}")
    if not np.all(np.isfinite(arr)):
        raise ValidationError("embedding contains non-finite values")
    if normalized:
        norm = float(np.linalg.norm(arr))
        if abs(norm - 1.0) > 1e-6:
            raise ValidationError(f"embedding norm {norm} is not within 1e-6 of 1")
    return arr


def cosine_similarity(a: np.ndarray, b: np.ndarray) -> float:
    """Cosine of the angle between two non-zero vectors."""
    av = np.asarray(a, dtype=np.float64).reshape(-1)
    bv = np.asarray(b, dtype=np.float64).reshape(-1)
    if av.shape != bv.shape:
        raise ValidationError(f"shape mismatch: {av.shape} vs {bv.shape}")
    na = float(np.linalg.norm(av))
    nb = float(np.linalg.norm(bv))
    if na == 0.0 or nb == 0.0:
        raise ValidationError("cosine similarity is undefined for zero vectors")
    return float(np.dot(av, bv) / (na * nb))


def embed_texts(texts: Sequence[str], embedder: Embedder) -> np.ndarray:
    """One unit-norm vector of the configured dimension per input text."""
    if len(texts) == 0:
        return np.zeros((0, EMBED_DIM), dtype=np.float32)
    vectors = np.asarray(embedder.embed(texts))
    if vectors.shape != (len(texts), embedder.dim):
        raise ValidationError(
            f"embedder returned shape {vectors.shape}, expected {(len(texts), embedder.dim)}"
        )
    if embedder.dim != EMBED_DIM:
        raise ValidationError(
            f"embedder dim {embedder.dim} does not match the configured {EMBED_DIM}"
        )
    for row in vectors:
        check_embedding(row, normalized=True)
    return vectors
