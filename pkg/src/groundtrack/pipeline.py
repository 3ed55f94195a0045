"""Stage composition: track, export, caption, retrieve, evaluate.

Every stage persists its artifact under the output directory, so any stage
can be re-run in isolation, and the `pipeline` command is exactly the
composition of the individual stage commands. Captions and remote embeddings
are cached by content hash (manifest + prompt + backend identity), making
re-runs idempotent and prompt changes cache-invalidating.
"""

from __future__ import annotations

import hashlib
import json
import os
import sys
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import formats
from .captioning import (
    PromptConfig,
    RemoteCaptionBackend,
    RemoteEmbedBackend,
    StubCaptionBackend,
)
from .embedding import HashingEmbedder, embed_texts
from .export import ClipManifest, VideoMeta, build_clip_manifest, render_overlay_script
from .metrics import EvalReport, MetricsConfig, evaluate
from .model import EMBED_DIM, Track, ValidationError
from .retrieval import assemble_submission, caption_tracks, retrieve_topk
from .tracker import TrackerConfig, run_sequence

ADAPTER_URL_ENV = "GROUNDTRACK_ADAPTER_URL"


def write_text_atomic(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_bytes_atomic(path: Path, data: bytes) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


@dataclass(frozen=True)
class VideoSpec:
    video_id: str
    det_path: Path
    frame_path_template: str = "{frame:06d}.jpg"


def load_videos(dataset_root: Path) -> list[VideoSpec]:
    manifest = dataset_root / "videos.json"
    if not manifest.exists():
        raise ValidationError(f"dataset root {dataset_root} has no videos.json")
    entries = json.loads(manifest.read_text(encoding="utf-8"))
    specs = []
    for entry in entries:
        specs.append(
            VideoSpec(
                video_id=str(entry["video_id"]),
                det_path=dataset_root / entry["det_path"],
                frame_path_template=str(
                    entry.get("frame_path_template", "{frame:06d}.jpg")
                ),
            )
        )
    return specs


@dataclass
class PipelineConfig:
    dataset_root: Path
    out_dir: Path
    tracker: TrackerConfig = field(default_factory=TrackerConfig)
    metrics: MetricsConfig = field(default_factory=MetricsConfig)
    backend: str = "stub"
    adapter_url: str | None = None
    k: int = 10
    prompt: PromptConfig = field(default_factory=PromptConfig)
    embed_seed: int = 0
    import_tracks: Path | None = None
    same_video_only: bool = True

    def __post_init__(self) -> None:
        if self.k < 1:
            raise ValidationError(f"k must be >= 1, got {self.k}")
        if self.backend not in ("stub", "remote"):
            raise ValidationError(f"backend must be stub or remote, got {self.backend}")
        if self.backend == "remote":
            self.adapter_url = self.adapter_url or os.environ.get(ADAPTER_URL_ENV)
            if not self.adapter_url:
                raise ValidationError(
                    "remote backend needs --adapter-url or "
                    f"the {ADAPTER_URL_ENV} environment variable"
                )

    def caption_backend(self):
        if self.backend == "remote":
            return RemoteCaptionBackend(self.adapter_url)
        return StubCaptionBackend()

    def embedder(self):
        if self.backend == "remote":
            return RemoteEmbedBackend(self.adapter_url, dim=EMBED_DIM)
        return HashingEmbedder(dim=EMBED_DIM, seed=self.embed_seed)


def _log(message: str) -> None:
    print(message, file=sys.stderr)


# ---------------------------------------------------------------------------
# Stages
# ---------------------------------------------------------------------------


def stage_track(cfg: PipelineConfig) -> dict:
    """Track every video (or import foreign tracks); writes tracks/<id>.txt
    plus a per-video track-count summary."""
    tracks_dir = cfg.out_dir / "tracks"
    summary = []
    for spec in load_videos(cfg.dataset_root):
        if cfg.import_tracks is not None:
            source = cfg.import_tracks / f"{spec.video_id}.txt"
            if not source.exists():
                raise ValidationError(f"--import-tracks has no file for {spec.video_id}")
            tracks = formats.parse_mot_tracks(
                source.read_text(encoding="utf-8"), spec.video_id
            )
        else:
            if not spec.det_path.exists():
                raise ValidationError(f"missing detection file {spec.det_path}")
            dets = formats.parse_mot_detections(spec.det_path.read_text(encoding="utf-8"))
            tracks = run_sequence(dets, cfg.tracker, spec.video_id)
        write_text_atomic(tracks_dir / f"{spec.video_id}.txt", formats.write_mot_tracks(tracks))
        summary.append({"video_id": spec.video_id, "tracks": len(tracks)})
        _log(f"track: {spec.video_id}: {len(tracks)} tracks")
    write_text_atomic(
        cfg.out_dir / "track_summary.json",
        json.dumps(summary, indent=2, sort_keys=True) + "\n",
    )
    return {"videos": len(summary), "tracks": sum(s["tracks"] for s in summary)}


def load_stage_tracks(cfg: PipelineConfig) -> dict[tuple[str, int], Track]:
    tracks: dict[tuple[str, int], Track] = {}
    for spec in load_videos(cfg.dataset_root):
        path = cfg.out_dir / "tracks" / f"{spec.video_id}.txt"
        if not path.exists():
            raise ValidationError(f"missing tracks for {spec.video_id}; run the track stage")
        for track in formats.parse_mot_tracks(path.read_text(encoding="utf-8"), spec.video_id):
            tracks[track.key()] = track
    return tracks


def stage_export(cfg: PipelineConfig) -> dict:
    """Clip manifests plus per-track overlay draw lists."""
    manifests: list[ClipManifest] = []
    overlays_dir = cfg.out_dir / "overlays"
    for spec in load_videos(cfg.dataset_root):
        path = cfg.out_dir / "tracks" / f"{spec.video_id}.txt"
        if not path.exists():
            raise ValidationError(f"missing tracks for {spec.video_id}; run the track stage")
        meta = VideoMeta(spec.video_id, spec.frame_path_template)
        for track in formats.parse_mot_tracks(path.read_text(encoding="utf-8"), spec.video_id):
            manifest = build_clip_manifest(track, meta)
            manifests.append(manifest)
            write_text_atomic(
                overlays_dir / f"{spec.video_id}_{track.track_id:06d}.tsv",
                render_overlay_script(manifest),
            )
    write_text_atomic(
        cfg.out_dir / "manifests.jsonl",
        "\n".join(json.dumps(m.to_dict(), sort_keys=True) for m in manifests)
        + ("\n" if manifests else ""),
    )
    _log(f"export: {len(manifests)} clip manifests")
    return {"manifests": len(manifests)}


def load_manifests(cfg: PipelineConfig) -> list[ClipManifest]:
    path = cfg.out_dir / "manifests.jsonl"
    if not path.exists():
        raise ValidationError("missing manifests.jsonl; run the export stage")
    return [
        ClipManifest.from_dict(json.loads(line))
        for line in path.read_text(encoding="utf-8").splitlines()
        if line.strip()
    ]


def _caption_cache_key(manifest: ClipManifest, prompt: PromptConfig, backend_id: str) -> str:
    payload = json.dumps(
        {"manifest": manifest.to_dict(), "prompt": prompt.prompt_text, "backend": backend_id},
        sort_keys=True,
    )
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


def stage_caption(cfg: PipelineConfig) -> dict:
    """Caption all manifests; content-hash cache keyed on manifest+prompt+backend."""
    manifests = load_manifests(cfg)
    backend = cfg.caption_backend()
    cache_dir = cfg.out_dir / "cache" / "captions"
    cache_dir.mkdir(parents=True, exist_ok=True)

    hits = 0
    to_request: list[ClipManifest] = []
    cached: dict[tuple[str, int], str] = {}
    keys = {
        (m.video_id, m.track_id): _caption_cache_key(m, cfg.prompt, backend.backend_id)
        for m in manifests
    }
    for manifest in manifests:
        key = keys[(manifest.video_id, manifest.track_id)]
        cache_file = cache_dir / f"{key}.json"
        if cache_file.exists():
            cached[(manifest.video_id, manifest.track_id)] = json.loads(
                cache_file.read_text(encoding="utf-8")
            )["caption"]
            hits += 1
        else:
            to_request.append(manifest)

    batch = caption_tracks(to_request, cfg.prompt, backend)
    for record in batch.records:
        key = keys[(record.video_id, record.track_id)]
        write_text_atomic(
            cache_dir / f"{key}.json",
            json.dumps({"caption": record.caption}, sort_keys=True) + "\n",
        )
        cached[(record.video_id, record.track_id)] = record.caption

    lines = []
    for manifest in manifests:
        caption = cached.get((manifest.video_id, manifest.track_id))
        if caption is None:
            continue
        lines.append(
            json.dumps(
                {
                    "video_id": manifest.video_id,
                    "track_id": manifest.track_id,
                    "caption": caption,
                },
                sort_keys=True,
            )
        )
    write_text_atomic(
        cfg.out_dir / "captions.jsonl", "\n".join(lines) + ("\n" if lines else "")
    )
    if batch.failures:
        for video_id, track_id, reason in batch.failures:
            _log(f"caption: FAILED ({video_id}, {track_id}): {reason}")
    _log(
        f"caption: cache hits {hits}/{len(manifests)}, "
        f"requested {len(to_request)}, failures {len(batch.failures)}"
    )
    return {
        "captions": len(lines),
        "cache_hits": hits,
        "requested": len(to_request),
        "failures": len(batch.failures),
        "total": len(manifests),
    }


def load_captions(cfg: PipelineConfig) -> list[dict]:
    path = cfg.out_dir / "captions.jsonl"
    if not path.exists():
        raise ValidationError("missing captions.jsonl; run the caption stage")
    return [
        json.loads(line)
        for line in path.read_text(encoding="utf-8").splitlines()
        if line.strip()
    ]


def _embed_with_cache(cfg: PipelineConfig, embedder, texts: list[str]) -> np.ndarray:
    """Embed texts, caching rows by content hash for remote backends."""
    if cfg.backend == "stub":
        return embed_texts(texts, embedder)
    cache_dir = cfg.out_dir / "cache" / "embeddings"
    cache_dir.mkdir(parents=True, exist_ok=True)
    rows: list[np.ndarray | None] = [None] * len(texts)
    missing: list[int] = []
    paths = []
    for i, text in enumerate(texts):
        key = hashlib.sha256(
            f"{embedder.backend_id}|{text}".encode("utf-8")
        ).hexdigest()
        path = cache_dir / f"{key}.f32"
        paths.append(path)
        if path.exists():
            rows[i] = np.frombuffer(path.read_bytes(), dtype="<f4")
        else:
            missing.append(i)
    if missing:
        fresh = embed_texts([texts[i] for i in missing], embedder)
        for j, i in enumerate(missing):
            rows[i] = fresh[j]
            write_bytes_atomic(paths[i], fresh[j].astype("<f4").tobytes())
    return np.vstack([r.reshape(1, -1) for r in rows]).astype(np.float32)


def stage_retrieve(cfg: PipelineConfig) -> dict:
    """Embed captions and queries, rank top-k per query, write the submission."""
    captions = load_captions(cfg)
    queries = formats.parse_queries(
        (cfg.dataset_root / "queries.jsonl").read_text(encoding="utf-8")
    )
    tracks = load_stage_tracks(cfg)
    embedder = cfg.embedder()

    texts = [c["caption"] for c in captions]
    vectors = _embed_with_cache(cfg, embedder, texts)
    candidates = {
        (c["video_id"], int(c["track_id"])): vectors[i] for i, c in enumerate(captions)
    }
    store = formats.write_embeddings_bytes(candidates) if candidates else b""
    if candidates:
        write_bytes_atomic(cfg.out_dir / "embeddings.bin", store)

    query_vectors = _embed_with_cache(cfg, embedder, [q.text for q in queries])
    results = [
        retrieve_topk(
            query, query_vectors[i], candidates, k=cfg.k, same_video_only=cfg.same_video_only
        )
        for i, query in enumerate(queries)
    ]
    entries = assemble_submission(results, tracks, {q.query_id: q for q in queries})
    write_text_atomic(cfg.out_dir / "submission.jsonl", formats.write_submission(entries))
    _log(f"retrieve: {len(queries)} queries, {len(candidates)} candidates, k={cfg.k}")
    return {"queries": len(queries), "candidates": len(candidates)}


def stage_evaluate(cfg: PipelineConfig) -> EvalReport | None:
    """Score the submission when the dataset ships ground truth."""
    gt_path = cfg.dataset_root / "gt.jsonl"
    if not gt_path.exists():
        _log("evaluate: no gt.jsonl in dataset root, skipping")
        return None
    submission = formats.parse_submission(
        (cfg.out_dir / "submission.jsonl").read_text(encoding="utf-8")
    )
    ground_truth = formats.parse_ground_truth(gt_path.read_text(encoding="utf-8"))
    report = evaluate(submission, ground_truth, cfg.metrics)
    write_text_atomic(cfg.out_dir / "report.txt", report.to_text_table())
    write_text_atomic(cfg.out_dir / "report.jsonl", report.to_records())
    _log("evaluate: report written")
    return report


def run_pipeline(cfg: PipelineConfig) -> dict:
    """Run the full composition; stage failures abort with the stage named."""
    summary: dict = {}
    for name, stage in (
        ("track", stage_track),
        ("export", stage_export),
        ("caption", stage_caption),
        ("retrieve", stage_retrieve),
        ("evaluate", stage_evaluate),
    ):
        try:
            result = stage(cfg)
        except Exception as exc:
            raise RuntimeError(f"pipeline stage {name!r} failed: {exc}") from exc
        if isinstance(result, dict):
            summary[name] = result
        elif isinstance(result, EvalReport):
            summary[name] = {"m_hiou": result.m_hiou}
    return summary
