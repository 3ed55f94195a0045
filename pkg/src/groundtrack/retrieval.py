"""Caption every track, embed captions and queries, rank tracks per query."""

from __future__ import annotations

import heapq
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .captioning import CaptionBackend, PromptConfig, call_with_retries
from .embedding import cosine_similarity
from .export import ClipManifest
from .model import CaptionRecord, Query, Track, ValidationError

DEFAULT_TOP_K = 10


@dataclass
class CaptionBatch:
    """Outcome of captioning a manifest batch; failures never abort the rest."""

    records: list[CaptionRecord]
    failures: list[tuple[str, int, str]] = field(default_factory=list)

    @property
    def complete(self) -> bool:
        return not self.failures


def caption_tracks(
    manifests: list[ClipManifest],
    prompt: PromptConfig,
    backend: CaptionBackend,
    max_in_flight: int = 4,
    retries: int = 3,
    backoff: float = 0.5,
) -> CaptionBatch:
    """Caption each manifest with bounded concurrency and bounded retries.

    Records come back in manifest order regardless of completion order. A
    track whose request keeps failing (or yields an empty caption) becomes a
    (video_id, track_id, reason) failure entry instead of a record.
    """

    def one(manifest: ClipManifest) -> str:
        def attempt() -> str:
            text = backend.caption(manifest, prompt)
            if not text:
                raise ValidationError(
                    f"empty caption for ({manifest.video_id}, {manifest.track_id})"
                )
            return text

        return call_with_retries(attempt, retries=retries, backoff=backoff)

    results: list[str | None] = [None] * len(manifests)
    errors: list[Exception | None] = [None] * len(manifests)
    workers = max(1, min(max_in_flight, len(manifests) or 1))
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = {pool.submit(one, m): i for i, m in enumerate(manifests)}
        for future, i in futures.items():
            try:
                results[i] = future.result()
            except Exception as exc:  # noqa: BLE001 - per-track fault isolation
                errors[i] = exc

    batch = CaptionBatch(records=[])
    for manifest, text, error in zip(manifests, results, errors):
        if error is not None or text is None:
            batch.failures.append(
                (manifest.video_id, manifest.track_id, str(error or "no caption"))
            )
        else:
            batch.records.append(
                CaptionRecord(
                    video_id=manifest.video_id,
                    track_id=manifest.track_id,
                    caption=text,
                )
            )
    return batch


@dataclass
class RetrievalResult:
    """Ranked candidates for one query; scores non-increasing, ties by key."""

    query_id: str
    ranked: list[tuple[str, int, float]]


def retrieve_topk(
    query: Query,
    query_vec: np.ndarray,
    candidates: dict[tuple[str, int], np.ndarray],
    k: int = DEFAULT_TOP_K,
    same_video_only: bool = True,
) -> RetrievalResult:
    """Exact top-k by cosine similarity.

    Ties break on ascending (video_id, track_id); an empty candidate pool
    yields an empty result. Matches a full-sort oracle by construction.
    """
    if k < 1:
        raise ValidationError(f"k must be >= 1, got {k}")
    items = []
    for (video_id, track_id), vec in candidates.items():
        if same_video_only and video_id != query.video_id:
            continue
        items.append(((video_id, track_id), cosine_similarity(query_vec, vec)))
    top = heapq.nsmallest(
        k, items, key=lambda item: (-item[1], item[0][0], item[0][1])
    )
    return RetrievalResult(
        query_id=query.query_id,
        ranked=[(vid, tid, score) for (vid, tid), score in top],
    )


def assemble_submission(
    results: list[RetrievalResult],
    tracks: dict[tuple[str, int], Track],
    queries: dict[str, Query] | None = None,
) -> list[dict]:
    """Expand ranked keys into full spatiotemporal extents, ready to serialize.

    Queries with no candidates stay present with an empty ranked list. A
    ranked key with no backing track is an error.
    """
    entries = []
    for result in results:
        ranked = []
        for video_id, track_id, score in result.ranked:
            track = tracks.get((video_id, track_id))
            if track is None:
                raise ValidationError(
                    f"submission references unknown track ({video_id}, {track_id})"
                )
            ranked.append(
                {
                    "video_id": video_id,
                    "track_id": track_id,
                    "score": score,
                    "boxes": [[f, *b.as_tuple()] for f, b in track.observations.items()],
                }
            )
        video_id = ""
        if queries and result.query_id in queries:
            video_id = queries[result.query_id].video_id
        elif ranked:
            video_id = ranked[0]["video_id"]
        entries.append(
            {"query_id": result.query_id, "video_id": video_id, "ranked": ranked}
        )
    return entries
