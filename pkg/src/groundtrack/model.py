"""Domain types shared across the tracking, retrieval and evaluation stages."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum


EMBED_DIM = 384


class ValidationError(ValueError):
    """A domain object violated one of its invariants."""


@dataclass(frozen=True)
class Box:
    """Axis-aligned bounding box in pixel coordinates (left, top, width, height)."""

    left: float
    top: float
    width: float
    height: float

    def __post_init__(self) -> None:
        for name in ("left", "top", "width", "height"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise ValidationError(f"box {name} must be finite, got {v!r}")
        if self.width < 0 or self.height < 0:
            raise ValidationError(
                f"box size must be non-negative, got {self.width}x{self.height}"
            )

    @property
    def area(self) -> float:
        return self.width * self.height

    @property
    def right(self) -> float:
        return self.left + self.width

    @property
    def bottom(self) -> float:
        return self.top + self.height

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.left, self.top, self.width, self.height)

    def enlarged(self, scale: float) -> "Box":
        """Scale width/height about the box center."""
        w = self.width * scale
        h = self.height * scale
        return Box(
            self.left - (w - self.width) / 2.0,
            self.top - (h - self.height) / 2.0,
            w,
            h,
        )


@dataclass(frozen=True)
class Detection:
    """One per-frame detector candidate."""

    frame: int
    box: Box
    score: float

    def __post_init__(self) -> None:
        if self.frame < 1:
            raise ValidationError(f"frame index must be >= 1, got {self.frame}")
        if not (0.0 <= self.score <= 1.0):
            raise ValidationError(f"score must be in [0, 1], got {self.score}")


class TrackState(Enum):
    ACTIVE = "active"
    OCCLUDED = "occluded"
    LOST = "lost"
    REMOVED = "removed"


@dataclass
class Track:
    """One object identity with its per-frame boxes and lifecycle state."""

    track_id: int
    video_id: str
    observations: dict[int, Box] = field(default_factory=dict)
    state: TrackState = TrackState.ACTIVE
    occluded_streak: int = 0
    frames_since_update: int = 0

    def __post_init__(self) -> None:
        if self.track_id < 1:
            raise ValidationError(f"track_id must be >= 1, got {self.track_id}")
        frames = list(self.observations)
        if any(b - a <= 0 for a, b in zip(frames, frames[1:])):
            raise ValidationError("observation frames must be strictly increasing")
        if self.state is TrackState.ACTIVE and self.occluded_streak != 0:
            raise ValidationError("active track cannot carry an occluded streak")

    @property
    def frames(self) -> list[int]:
        return list(self.observations)

    @property
    def first_frame(self) -> int:
        return next(iter(self.observations))

    @property
    def last_frame(self) -> int:
        return next(reversed(self.observations))

    def key(self) -> tuple[str, int]:
        return (self.video_id, self.track_id)


@dataclass(frozen=True)
class Query:
    """A free-form language description bound to one video."""

    query_id: str
    video_id: str
    text: str

    def __post_init__(self) -> None:
        if not self.text:
            raise ValidationError(f"query {self.query_id!r} has empty text")


@dataclass(frozen=True)
class CaptionRecord:
    """Generated caption for one track."""

    video_id: str
    track_id: int
    caption: str

    def __post_init__(self) -> None:
        if not self.caption:
            raise ValidationError(
                f"caption for ({self.video_id}, {self.track_id}) is empty"
            )


@dataclass
class GroundTruthEntry:
    """Annotated track instances matching one query."""

    query_id: str
    video_id: str
    tracks: list[Track]

    def __post_init__(self) -> None:
        if not self.tracks:
            raise ValidationError(f"ground truth for {self.query_id!r} has no tracks")
