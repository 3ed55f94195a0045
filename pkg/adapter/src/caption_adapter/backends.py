"""Inference backends behind one interface.

The stub backend is always ready and fully parallel. The real backend wraps
a video-language captioner plus a sentence embedder; it loads lazily, serves
503 until ready, and serializes inference behind a lock.
"""

from __future__ import annotations

import threading
from typing import Protocol, Sequence

import numpy as np

from .schemas import DEFAULT_CAPTION_PROMPT, EMBED_DIM
from .stub import stub_caption, stub_embed

DEFAULT_EMBED_MODEL = "sentence-transformers/all-MiniLM-L6-v2"
DEFAULT_CAPTION_MODEL = "llava-hf/LLaVA-NeXT-Video-7B-hf"


class Backend(Protocol):
    name: str

    def ready(self) -> bool: ...

    def caption(
        self, video_id: str, track_id: int, frames: Sequence[str], prompt: str
    ) -> str: ...

    def embed(self, texts: Sequence[str]) -> np.ndarray: ...


class StubBackend:
    name = "stub"

    def __init__(self, seed: int = 0) -> None:
        self.seed = seed

    def ready(self) -> bool:
        return True

    def caption(self, video_id, track_id, frames, prompt):
        return stub_caption(video_id, track_id, len(frames), prompt)

    def embed(self, texts):
        return stub_embed(list(texts), dim=EMBED_DIM, seed=self.seed)


class RealBackend:
    """Real models; heavy imports happen at load() time, never at import."""

    name = "real"

    def __init__(
        self,
        embed_model: str = DEFAULT_EMBED_MODEL,
        caption_model: str = DEFAULT_CAPTION_MODEL,
        device: str = "cpu",
        max_new_tokens: int = 200,
        temperature: float = 0.0,
        embedder=None,
        captioner=None,
    ) -> None:
        self.embed_model_name = embed_model
        self.caption_model_name = caption_model
        self.device = device
        self.max_new_tokens = max_new_tokens
        # Greedy decoding by default so repeated requests agree.
        self.temperature = temperature
        self._embedder = embedder
        self._captioner = captioner
        self._ready = embedder is not None and captioner is not None
        self._lock = threading.Lock()

    def load(self) -> None:
        if self._ready:
            return
        from sentence_transformers import SentenceTransformer

        self._embedder = SentenceTransformer(self.embed_model_name, device=self.device)
        if self._captioner is None:
            self._captioner = _HFVideoCaptioner(
                self.caption_model_name,
                self.device,
                self.max_new_tokens,
                self.temperature,
            )
        self._ready = True

    def ready(self) -> bool:
        return self._ready

    def caption(self, video_id, track_id, frames, prompt):
        with self._lock:
            text = self._captioner(frames, prompt or DEFAULT_CAPTION_PROMPT)
        if not text:
            raise RuntimeError("caption model returned empty output")
        return text

    def embed(self, texts):
        with self._lock:
            vectors = self._embedder.encode(
                list(texts), normalize_embeddings=True, convert_to_numpy=True
            )
        return np.asarray(vectors, dtype=np.float32).reshape(len(texts), -1)


class _HFVideoCaptioner:
    def __init__(self, model_name, device, max_new_tokens, temperature):
        import torch
        from transformers import AutoProcessor, LlavaNextVideoForConditionalGeneration

        self.processor = AutoProcessor.from_pretrained(model_name)
        self.model = LlavaNextVideoForConditionalGeneration.from_pretrained(
            model_name, torch_dtype=torch.float32
        ).to(device)
        self.device = device
        self.max_new_tokens = max_new_tokens
        self.temperature = temperature

    def __call__(self, frames, prompt):
        import torch
        from PIL import Image

        images = [Image.open(path).convert("RGB") for path in frames]
        conversation = [
            {
                "role": "user",
                "content": [{"type": "video"}, {"type": "text", "text": prompt}],
            }
        ]
        text_prompt = self.processor.apply_chat_template(
            conversation, add_generation_prompt=True
        )
        inputs = self.processor(
            text=text_prompt, videos=[images], return_tensors="pt"
        ).to(self.device)
        with torch.no_grad():
            out = self.model.generate(
                **inputs,
                max_new_tokens=self.max_new_tokens,
                do_sample=self.temperature > 0,
                temperature=self.temperature or None,
            )
        decoded = self.processor.batch_decode(out, skip_special_tokens=True)
        return decoded[0].split("ASSISTANT:")[-1].strip()
