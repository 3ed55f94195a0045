from __future__ import annotations

import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from groundtrack.model import Box, Track  # noqa: E402


@pytest.fixture
def make_track():
    def _make(track_id: int, video_id: str, frame_boxes: dict[int, tuple]) -> Track:
        return Track(
            track_id=track_id,
            video_id=video_id,
            observations={f: Box(*b) for f, b in sorted(frame_boxes.items())},
        )

    return _make


def span_track(track_id, video_id, first, last, box=(0.0, 0.0, 10.0, 10.0)):
    """Track with one identical box over an inclusive frame range."""
    return Track(
        track_id=track_id,
        video_id=video_id,
        observations={f: Box(*box) for f in range(first, last + 1)},
    )
