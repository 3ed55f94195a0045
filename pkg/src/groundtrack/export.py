"""Turn tracks into caption-ready clip specifications.

A clip manifest names the frames to sample (at most 24, evenly spaced over
the track's observed frames) and the highlight box to draw on each. Actual
pixel rendering is out of scope; render_overlay_script emits a declarative
per-frame draw list any external renderer can consume.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .formats import ParseError, format_coord
from .model import Box, Track, ValidationError

FRAME_SAMPLE_COUNT = 24
HIGHLIGHT_COLOR = "green"
HIGHLIGHT_LINE_WIDTH = 3


@dataclass(frozen=True)
class VideoMeta:
    video_id: str
    frame_path_template: str = "{frame:06d}.jpg"

    def frame_path(self, frame: int) -> str:
        return self.frame_path_template.format(frame=frame)


@dataclass
class ClipManifest:
    video_id: str
    track_id: int
    frame_span: tuple[int, int]
    sampled_frames: list[int]
    overlays: dict[int, Box]
    frame_path_template: str
    highlight_color: str = HIGHLIGHT_COLOR
    line_width: int = HIGHLIGHT_LINE_WIDTH

    def __post_init__(self) -> None:
        lo, hi = self.frame_span
        frames = self.sampled_frames
        if any(b <= a for a, b in zip(frames, frames[1:])):
            raise ValidationError("sampled frames must be strictly increasing")
        if frames and (frames[0] < lo or frames[-1] > hi):
            raise ValidationError("sampled frames must lie within the frame span")
        if set(frames) != set(self.overlays):
            raise ValidationError("overlays must cover exactly the sampled frames")

    def frame_path(self, frame: int) -> str:
        return self.frame_path_template.format(frame=frame)

    def to_dict(self) -> dict:
        return {
            "video_id": self.video_id,
            "track_id": self.track_id,
            "frame_span": list(self.frame_span),
            "sampled_frames": list(self.sampled_frames),
            "overlays": {str(f): list(b.as_tuple()) for f, b in self.overlays.items()},
            "frame_path_template": self.frame_path_template,
            "highlight_color": self.highlight_color,
            "line_width": self.line_width,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ClipManifest":
        return cls(
            video_id=str(data["video_id"]),
            track_id=int(data["track_id"]),
            frame_span=tuple(data["frame_span"]),
            sampled_frames=[int(f) for f in data["sampled_frames"]],
            overlays={int(f): Box(*vals) for f, vals in data["overlays"].items()},
            frame_path_template=str(data["frame_path_template"]),
            highlight_color=str(data.get("highlight_color", HIGHLIGHT_COLOR)),
            line_width=int(data.get("line_width", HIGHLIGHT_LINE_WIDTH)),
        )


def sample_frames_evenly(frames: list[int], m: int = FRAME_SAMPLE_COUNT) -> list[int]:
    """Pick min(len(frames), m) entries, evenly spaced, endpoints included.

    For n > m the positions are round(i * (n - 1) / (m - 1)) for i in 0..m-1
    (half-up rounding); shorter inputs come back unchanged.
    """
    if not frames:
        raise ValidationError("cannot sample from an empty frame list")
    if m < 1:
        raise ValidationError(f"sample count must be >= 1, got {m}")
    n = len(frames)
    if n <= m:
        return list(frames)
    if m == 1:
        return [frames[0]]
    step = (n - 1) / (m - 1)
    return [frames[int(math.floor(i * step + 0.5))] for i in range(m)]


def build_clip_manifest(
    track: Track, video_meta: VideoMeta, m: int = FRAME_SAMPLE_COUNT
) -> ClipManifest:
    """Manifest for one track: sampled frames plus the track's own highlight box."""
    if not track.observations:
        raise ValidationError(f"track {track.track_id} has no observations")
    frames = track.frames
    sampled = sample_frames_evenly(frames, m)
    return ClipManifest(
        video_id=video_meta.video_id,
        track_id=track.track_id,
        frame_span=(frames[0], frames[-1]),
        sampled_frames=sampled,
        overlays={f: track.observations[f] for f in sampled},
        frame_path_template=video_meta.frame_path_template,
    )


def render_overlay_script(manifest: ClipManifest) -> str:
    """Tab-separated draw list: frame, frame path, box, color; one sampled
    frame per line, frame order."""
    lines = []
    for frame in manifest.sampled_frames:
        box = manifest.overlays[frame]
        coords = ",".join(format_coord(v) for v in box.as_tuple())
        lines.append(
            f"{frame}\t{manifest.frame_path(frame)}\t{coords}\t{manifest.highlight_color}"
        )
    return "\n".join(lines) + ("\n" if lines else "")


def parse_overlay_script(text: str) -> list[tuple[int, str, Box, str]]:
    records = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 4:
            raise ParseError(f"expected 4 tab-separated fields, got {len(parts)}", lineno)
        frame_s, path, coords, color = parts
        try:
            frame = int(frame_s)
            box = Box(*(float(v) for v in coords.split(",")))
        except (TypeError, ValueError, ValidationError) as exc:
            raise ParseError(str(exc), lineno) from None
        records.append((frame, path, box, color))
    return records
