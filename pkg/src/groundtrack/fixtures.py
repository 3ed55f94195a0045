"""Seeded synthetic scenes for end-to-end runs without real data.

The generated video contains objects with known trajectories (linear walkers
that cross, plus a stationary object), detector noise, a dropout window, a
low-confidence score band and occasional spurious boxes, so the tracker's
recovery paths all get exercised. Queries name the objects, and the ground
truth carries their clean trajectories.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .formats import write_ground_truth, write_queries
from .model import Box, GroundTruthEntry, Query, Track

VIDEO_ID = "synth01"
FRAME_TEMPLATE = "frames/synth01/{frame:06d}.jpg"


@dataclass(frozen=True)
class _SceneObject:
    name: str
    start: tuple[float, float]
    velocity: tuple[float, float]
    size: tuple[float, float]
    first_frame: int
    last_frame: int
    score_range: tuple[float, float]
    low_band: tuple[int, int] | None = None  # frames with second-stage scores
    dropout: tuple[int, int] | None = None  # frames with no detection at all
    query: str | None = None


def _scene_objects(n_frames: int) -> list[_SceneObject]:
    mid = n_frames // 2
    return [
        _SceneObject(
            name="walker_right",
            start=(80.0, 300.0),
            velocity=(9.0, 0.0),
            size=(42.0, 84.0),
            first_frame=1,
            last_frame=n_frames,
            score_range=(0.82, 0.97),
            query="the person walking from the left side to the right side",
        ),
        _SceneObject(
            name="walker_left",
            start=(80.0 + 9.0 * n_frames, 330.0),
            velocity=(-9.0, 0.0),
            size=(40.0, 80.0),
            first_frame=1,
            last_frame=n_frames,
            score_range=(0.75, 0.92),
            low_band=(mid - 2, mid + 2),
            query="the person moving from the right side towards the left",
        ),
        _SceneObject(
            name="stander",
            start=(900.0, 120.0),
            velocity=(0.0, 0.0),
            size=(38.0, 76.0),
            first_frame=1,
            last_frame=n_frames,
            score_range=(0.85, 0.95),
            dropout=(mid, mid + 2),
            query="the person standing still near the top of the scene",
        ),
    ]


def _truth_track(obj: _SceneObject, track_id: int) -> Track:
    observations = {}
    for frame in range(obj.first_frame, obj.last_frame + 1):
        x = obj.start[0] + obj.velocity[0] * (frame - obj.first_frame)
        y = obj.start[1] + obj.velocity[1] * (frame - obj.first_frame)
        observations[frame] = Box(round(x, 2), round(y, 2), obj.size[0], obj.size[1])
    return Track(track_id=track_id, video_id=VIDEO_ID, observations=observations)


def make_fixture(
    out_dir: str | Path,
    seed: int = 1,
    n_frames: int = 40,
    jitter: float = 1.0,
    spurious_every: int = 15,
) -> dict:
    """Write detections, queries and ground truth under out_dir.

    Returns a summary dict (paths plus expected object count). Deterministic
    for a fixed argument set.
    """
    out = Path(out_dir)
    (out / "det").mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    objects = _scene_objects(n_frames)
    truth = {obj.name: _truth_track(obj, i + 1) for i, obj in enumerate(objects)}

    det_lines: list[str] = []
    for frame in range(1, n_frames + 1):
        for obj in objects:
            track = truth[obj.name]
            if frame not in track.observations:
                continue
            if obj.dropout and obj.dropout[0] <= frame <= obj.dropout[1]:
                continue
            clean = track.observations[frame]
            dx, dy = rng.uniform(-jitter, jitter, size=2)
            if obj.low_band and obj.low_band[0] <= frame <= obj.low_band[1]:
                score = rng.uniform(0.25, 0.55)
            else:
                score = rng.uniform(*obj.score_range)
            det_lines.append(
                f"{frame},-1,{round(clean.left + dx, 2)},{round(clean.top + dy, 2)},"
                f"{clean.width},{clean.height},{round(score, 3)},-1,-1,-1"
            )
        if spurious_every and frame % spurious_every == 0:
            sx = float(rng.uniform(50, 1100))
            sy = float(rng.uniform(50, 500))
            det_lines.append(
                f"{frame},-1,{round(sx, 2)},{round(sy, 2)},30,60,"
                f"{round(float(rng.uniform(0.75, 0.9)), 3)},-1,-1,-1"
            )

    det_path = out / "det" / f"{VIDEO_ID}.txt"
    det_path.write_text("\n".join(det_lines) + "\n", encoding="utf-8")

    queries = []
    gt_entries = []
    for i, obj in enumerate(objects):
        if not obj.query:
            continue
        query_id = f"q{i + 1}"
        queries.append(Query(query_id=query_id, video_id=VIDEO_ID, text=obj.query))
        gt_entries.append(
            GroundTruthEntry(
                query_id=query_id, video_id=VIDEO_ID, tracks=[truth[obj.name]]
            )
        )

    (out / "queries.jsonl").write_text(write_queries(queries), encoding="utf-8")
    (out / "gt.jsonl").write_text(write_ground_truth(gt_entries), encoding="utf-8")

    videos = [
        {
            "video_id": VIDEO_ID,
            "det_path": str(det_path.relative_to(out)),
            "frame_path_template": FRAME_TEMPLATE,
        }
    ]
    (out / "videos.json").write_text(
        json.dumps(videos, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )

    summary = {
        "seed": seed,
        "n_frames": n_frames,
        "video_id": VIDEO_ID,
        "objects": len(objects),
        "queries": len(queries),
        "detections": len(det_lines),
    }
    (out / "fixture.json").write_text(
        json.dumps(summary, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    return summary
