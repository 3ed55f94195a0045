"""Two-stage tracking-by-detection with an occlusion-aware track lifecycle.

Association is BYTE-style: high-confidence detections are matched first
against all live tracks on IoU cost, then the leftovers are offered the
low-confidence detections. Unmatched tracks that still overlap another live
track are treated as occluded rather than lost: their boxes are enlarged for
matching, their velocity is dampened each hidden frame, and on recovery the
velocity is re-estimated from the observation history and the position is
smoothed between prediction and measurement.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .assignment import solve_assignment
from .geometry import iou_matrix
from .kalman import KalmanFilter, MotionState, box_to_measurement
from .model import Box, Detection, Track, TrackState, ValidationError


class FrameOrderError(ValueError):
    """Frames must be presented in strictly increasing order."""


@dataclass
class TrackerConfig:
    """Tracker parameterization; defaults are the production values."""

    track_thresh: float = 0.7
    track_buffer: int = 30
    match_thresh: float = 0.85
    min_box_area: float = 100.0
    reset_velocity_offset_occ: int = 5
    reset_pos_offset_occ: int = 3
    enlarge_bbox_occ: float = 1.1
    dampen_motion_occ: float = 0.89
    active_occ_to_lost_thresh: int = 10
    init_iou_suppress: float = 0.8
    # Second-stage score floor and occlusion-overlap trigger; not part of the
    # published parameter set, defaults follow common practice.
    low_score_thresh: float = 0.1
    occ_overlap_thresh: float = 0.3
    # When true, match_thresh is read as a minimum IoU instead of a bound on
    # cost = 1 - IoU.
    match_thresh_is_min_iou: bool = False
    # Blend weight for an optional appearance-affinity hook (0 = pure IoU).
    appearance_weight: float = 0.0

    def __post_init__(self) -> None:
        in_unit = {
            "track_thresh": self.track_thresh,
            "match_thresh": self.match_thresh,
            "init_iou_suppress": self.init_iou_suppress,
            "low_score_thresh": self.low_score_thresh,
            "occ_overlap_thresh": self.occ_overlap_thresh,
            "appearance_weight": self.appearance_weight,
        }
        for name, value in in_unit.items():
            if not (0.0 <= value <= 1.0):
                raise ValidationError(f"{name} must be in [0, 1], got {value}")
        if self.low_score_thresh >= self.track_thresh:
            raise ValidationError(
                f"low_score_thresh ({self.low_score_thresh}) must be below "
                f"track_thresh ({self.track_thresh})"
            )
        if self.min_box_area < 0:
            raise ValidationError(f"min_box_area must be >= 0, got {self.min_box_area}")
        if self.enlarge_bbox_occ < 1.0:
            raise ValidationError(
                f"enlarge_bbox_occ must be >= 1, got {self.enlarge_bbox_occ}"
            )
        if not (0.0 < self.dampen_motion_occ <= 1.0):
            raise ValidationError(
                f"dampen_motion_occ must be in (0, 1], got {self.dampen_motion_occ}"
            )
        for name in ("track_buffer", "active_occ_to_lost_thresh"):
            if getattr(self, name) < 0:
                raise ValidationError(f"{name} must be >= 0")
        for name in ("reset_velocity_offset_occ", "reset_pos_offset_occ"):
            if getattr(self, name) < 1:
                raise ValidationError(f"{name} must be >= 1")

    @property
    def cost_gate(self) -> float:
        if self.match_thresh_is_min_iou:
            return 1.0 - self.match_thresh
        return self.match_thresh

    @classmethod
    def from_dict(cls, data: dict) -> "TrackerConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValidationError(f"unknown tracker config keys: {sorted(unknown)}")
        return cls(**data)

    @classmethod
    def from_file(cls, path: str | Path) -> "TrackerConfig":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


class _TrackHandle:
    """Mutable per-track state while a sequence is being processed."""

    def __init__(
        self, track_id: int, video_id: str, frame: int, det: Detection, kf: KalmanFilter
    ) -> None:
        self.track_id = track_id
        self.video_id = video_id
        self.motion: MotionState = kf.initiate(det.box)
        self.observations: dict[int, Box] = {frame: det.box}
        self.state = TrackState.ACTIVE
        self.occluded_streak = 0
        self.frames_since_update = 0
        self.score = det.score
        self.predicted_box: Box = det.box
        self.current_box: Box = det.box

    def predicted_position_box(self) -> Box:
        cx, cy, a, h = self.motion.mean[:4]
        h = max(float(h), 0.0)
        w = max(float(a) * h, 0.0)
        return Box(float(cx) - w / 2.0, float(cy) - h / 2.0, w, h)

    def to_track(self) -> Track:
        return Track(
            track_id=self.track_id,
            video_id=self.video_id,
            observations=dict(self.observations),
            state=self.state,
            occluded_streak=self.occluded_streak,
            frames_since_update=self.frames_since_update,
        )


@dataclass
class AssociationResult:
    matches: list[tuple[_TrackHandle, Detection]]
    unmatched_tracks: list[_TrackHandle]
    unmatched_high_dets: list[Detection]


AppearanceHook = Callable[[Sequence[_TrackHandle], Sequence[Detection]], np.ndarray]


def associate_frame(
    tracks: Sequence[_TrackHandle],
    detections: Sequence[Detection],
    cfg: TrackerConfig,
    appearance_hook: AppearanceHook | None = None,
) -> AssociationResult:
    """Two-stage association of one frame's detections to live tracks.

    Stage 1 offers detections scoring at least track_thresh, stage 2 offers
    the low-score band to the tracks left over; both stages gate the IoU cost
    at cost_gate. Occluded tracks are matched on enlarged boxes. Low-score
    detections never become new-track candidates.
    """
    high = [d for d in detections if d.score >= cfg.track_thresh]
    low = [d for d in detections if cfg.low_score_thresh <= d.score < cfg.track_thresh]

    def match_box(t: _TrackHandle) -> Box:
        if t.state is TrackState.OCCLUDED:
            return t.predicted_box.enlarged(cfg.enlarge_bbox_occ)
        return t.predicted_box

    def run_stage(pool: list[_TrackHandle], dets: list[Detection]):
        if not pool or not dets:
            return [], list(range(len(pool))), list(range(len(dets)))
        cost = 1.0 - iou_matrix([match_box(t) for t in pool], [d.box for d in dets])
        if appearance_hook is not None and cfg.appearance_weight > 0.0:
            affinity = np.asarray(appearance_hook(pool, dets), dtype=np.float64)
            w = cfg.appearance_weight
            cost = (1.0 - w) * cost + w * affinity
        pairs = solve_assignment(cost, cfg.cost_gate)
        matched_t = {r for r, _ in pairs}
        matched_d = {c for _, c in pairs}
        return (
            pairs,
            [i for i in range(len(pool)) if i not in matched_t],
            [j for j in range(len(dets)) if j not in matched_d],
        )

    pool = list(tracks)
    pairs1, left_t, left_high = run_stage(pool, high)
    matches = [(pool[r], high[c]) for r, c in pairs1]

    pool2 = [pool[i] for i in left_t]
    pairs2, left_t2, _ = run_stage(pool2, low)
    matches.extend((pool2[r], low[c]) for r, c in pairs2)

    return AssociationResult(
        matches=matches,
        unmatched_tracks=[pool2[i] for i in left_t2],
        unmatched_high_dets=[high[j] for j in left_high],
    )


class Tracker:
    """Stateful per-video tracker; feed frames in increasing order via step()."""

    def __init__(
        self,
        cfg: TrackerConfig | None = None,
        video_id: str = "video",
        kf: KalmanFilter | None = None,
        appearance_hook: AppearanceHook | None = None,
    ) -> None:
        self.cfg = cfg or TrackerConfig()
        self.video_id = video_id
        self.kf = kf or KalmanFilter()
        self.appearance_hook = appearance_hook
        self.tracks: list[_TrackHandle] = []
        self.next_id = 1
        self.last_frame = 0

    def live_tracks(self) -> list[_TrackHandle]:
        return [t for t in self.tracks if t.state is not TrackState.REMOVED]

    def step(
        self, frame: int, detections: Sequence[Detection]
    ) -> list[tuple[int, Box]]:
        """Process one frame; returns the (track_id, box) observations it produced."""
        if frame <= self.last_frame:
            raise FrameOrderError(
                f"frame {frame} is not after previous frame {self.last_frame}"
            )
        self.last_frame = frame
        cfg = self.cfg

        for det in detections:
            if det.frame != frame:
                raise ValidationError(
                    f"detection for frame {det.frame} fed into step({frame})"
                )
        dets = [d for d in detections if d.box.area >= cfg.min_box_area]

        live = self.live_tracks()
        for t in live:
            t.motion = self.kf.predict(t.motion)
            t.predicted_box = t.predicted_position_box()
            t.current_box = t.predicted_box

        result = associate_frame(live, dets, cfg, self.appearance_hook)

        emitted: list[tuple[int, Box]] = []
        for handle, det in result.matches:
            was_occluded = handle.state is TrackState.OCCLUDED and handle.occluded_streak > 0
            predicted_box = handle.predicted_box
            handle.motion = self.kf.update(handle.motion, det.box)
            if was_occluded:
                self._recover_from_occlusion(handle, frame, det, predicted_box)
            handle.state = TrackState.ACTIVE
            handle.occluded_streak = 0
            handle.frames_since_update = 0
            handle.observations[frame] = det.box
            handle.current_box = det.box
            handle.score = det.score
            emitted.append((handle.track_id, det.box))

        for t in result.unmatched_tracks:
            t.frames_since_update += 1
            if t.state in (TrackState.ACTIVE, TrackState.OCCLUDED) and self._overlaps_other(
                t, live
            ):
                t.state = TrackState.OCCLUDED
                t.occluded_streak += 1
                t.motion.mean[4:] *= cfg.dampen_motion_occ
                if t.occluded_streak > cfg.active_occ_to_lost_thresh:
                    t.state = TrackState.LOST
            else:
                t.state = TrackState.LOST
            if t.frames_since_update > cfg.track_buffer:
                t.state = TrackState.REMOVED

        current = self.live_tracks()
        for det in result.unmatched_high_dets:
            if current:
                overlap = iou_matrix([det.box], [t.current_box for t in current])
                if float(overlap.max()) > cfg.init_iou_suppress:
                    continue
            handle = _TrackHandle(self.next_id, self.video_id, frame, det, self.kf)
            self.next_id += 1
            self.tracks.append(handle)
            current.append(handle)
            emitted.append((handle.track_id, det.box))

        return emitted

    def _overlaps_other(self, t: _TrackHandle, live: list[_TrackHandle]) -> bool:
        others = [o for o in live if o is not t and o.state is not TrackState.REMOVED]
        if not others:
            return False
        overlap = iou_matrix([t.predicted_box], [o.current_box for o in others])
        return float(overlap.max()) > self.cfg.occ_overlap_thresh

    def _recover_from_occlusion(
        self, handle: _TrackHandle, frame: int, det: Detection, predicted_box: Box
    ) -> None:
        """Re-estimate velocity from history and smooth position after a streak.

        Velocity is the finite difference against the observation closest to
        reset_velocity_offset_occ frames back (or the oldest available); the
        recorded Kalman position is pulled towards the prediction with weight
        1 / reset_pos_offset_occ. Emitted observations are untouched; this
        only conditions the motion state used for later predictions.
        """
        cfg = self.cfg
        target = frame - cfg.reset_velocity_offset_occ
        past_frames = [f for f in handle.observations if f <= target]
        anchor = past_frames[-1] if past_frames else next(iter(handle.observations))
        gap = frame - anchor
        z_now = box_to_measurement(det.box)
        z_back = box_to_measurement(handle.observations[anchor])
        handle.motion.mean[4:] = (z_now - z_back) / float(gap)
        if predicted_box.height > 0:
            z_pred = box_to_measurement(predicted_box)
            handle.motion.mean[:4] = z_now + (z_pred - z_now) / float(
                cfg.reset_pos_offset_occ
            )

    def export_tracks(self) -> list[Track]:
        return [t.to_track() for t in self.tracks]


def run_sequence(
    detections_by_frame: dict[int, list[Detection]],
    cfg: TrackerConfig | None = None,
    video_id: str = "video",
    kf: KalmanFilter | None = None,
    appearance_hook: AppearanceHook | None = None,
) -> list[Track]:
    """Track a whole sequence; frames run contiguously from 1 (empty allowed).

    Deterministic in its inputs. Every emitted observation is a matched
    detection box; predictions only steer association.
    """
    tracker = Tracker(cfg, video_id, kf, appearance_hook)
    last = max(detections_by_frame, default=0)
    for frame in range(1, last + 1):
        tracker.step(frame, detections_by_frame.get(frame, []))
    return tracker.export_tracks()
