"""Constant-velocity Kalman filter over (cx, cy, aspect, height) box states.

The 8-dimensional state is (cx, cy, a, h, vcx, vcy, va, vh). Noise standard
deviations scale with the box height: position std = height / 20, velocity
std = height / 160. Process and measurement noise carry separate scale knobs
so degenerate (noise-free) configurations stay usable in analysis code.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import Box, ValidationError

STATE_DIM = 8
MEAS_DIM = 4


@dataclass
class MotionState:
    """Kalman mean and covariance for one track."""

    mean: np.ndarray
    covariance: np.ndarray

    def __post_init__(self) -> None:
        self.mean = np.asarray(self.mean, dtype=np.float64).reshape(STATE_DIM)
        self.covariance = np.asarray(self.covariance, dtype=np.float64).reshape(
            STATE_DIM, STATE_DIM
        )

    @property
    def velocity(self) -> np.ndarray:
        return self.mean[MEAS_DIM:]

    def position_box(self) -> Box:
        return measurement_to_box(self.mean[:MEAS_DIM])


def box_to_measurement(box: Box) -> np.ndarray:
    """(cx, cy, aspect, height) vector for a box; height must be positive."""
    if box.height <= 0:
        raise ValidationError(f"measurement box needs positive height, got {box.height}")
    return np.array(
        [
            box.left + box.width / 2.0,
            box.top + box.height / 2.0,
            box.width / box.height,
            box.height,
        ],
        dtype=np.float64,
    )


def measurement_to_box(z: np.ndarray) -> Box:
    cx, cy, a, h = (float(v) for v in z)
    w = a * h
    return Box(cx - w / 2.0, cy - h / 2.0, w, h)


class KalmanFilter:
    def __init__(
        self,
        std_weight_position: float = 1.0 / 20,
        std_weight_velocity: float = 1.0 / 160,
        process_scale: float = 1.0,
        measurement_scale: float = 1.0,
    ) -> None:
        self._sp = std_weight_position
        self._sv = std_weight_velocity
        self._process_scale = process_scale
        self._measurement_scale = measurement_scale
        self._motion_mat = np.eye(STATE_DIM)
        for i in range(MEAS_DIM):
            self._motion_mat[i, MEAS_DIM + i] = 1.0
        self._update_mat = np.eye(MEAS_DIM, STATE_DIM)

    def initiate(self, box: Box) -> MotionState:
        """Fresh state from a first observation; velocities start at zero."""
        z = box_to_measurement(box)
        mean = np.zeros(STATE_DIM)
        mean[:MEAS_DIM] = z
        h = z[3]
        std = np.array(
            [
                2 * self._sp * h,
                2 * self._sp * h,
                1e-2,
                2 * self._sp * h,
                10 * self._sv * h,
                10 * self._sv * h,
                1e-5,
                10 * self._sv * h,
            ]
        )
        return MotionState(mean, np.diag(np.square(std)))

    def predict(self, state: MotionState) -> MotionState:
        """Advance one frame under the constant-velocity model."""
        h = state.mean[3]
        s = self._process_scale
        std = np.array(
            [
                self._sp * h * s,
                self._sp * h * s,
                1e-2 * s,
                self._sp * h * s,
                self._sv * h * s,
                self._sv * h * s,
                1e-5 * s,
                self._sv * h * s,
            ]
        )
        motion_cov = np.diag(np.square(std))
        mean = self._motion_mat @ state.mean
        cov = self._motion_mat @ state.covariance @ self._motion_mat.T + motion_cov
        cov = (cov + cov.T) / 2.0
        return MotionState(mean, cov)

    def _measurement_noise(self, state: MotionState) -> np.ndarray:
        h = state.mean[3]
        s = self._measurement_scale
        std = np.array([self._sp * h * s, self._sp * h * s, 1e-1 * s, self._sp * h * s])
        return np.diag(np.square(std))

    def project(self, state: MotionState) -> tuple[np.ndarray, np.ndarray]:
        """Project state into measurement space; returns (mean, innovation cov)."""
        mean = self._update_mat @ state.mean
        cov = (
            self._update_mat @ state.covariance @ self._update_mat.T
            + self._measurement_noise(state)
        )
        return mean, cov

    def update(self, state: MotionState, box: Box) -> MotionState:
        """Condition the state on a measured box (Joseph-form covariance update)."""
        z = box_to_measurement(box)
        projected_mean, s_cov = self.project(state)
        # Tiny ridge keeps the solve defined when both the state covariance
        # and the measurement noise have collapsed to zero.
        ridge = 1e-12 * (1.0 + float(np.trace(s_cov)) / MEAS_DIM)
        noise = self._measurement_noise(state) + ridge * np.eye(MEAS_DIM)
        s_cov = s_cov + ridge * np.eye(MEAS_DIM)
        gain = np.linalg.solve(s_cov.T, (state.covariance @ self._update_mat.T).T).T
        innovation = z - projected_mean
        mean = state.mean + gain @ innovation
        i_kh = np.eye(STATE_DIM) - gain @ self._update_mat
        cov = i_kh @ state.covariance @ i_kh.T + gain @ noise @ gain.T
        cov = (cov + cov.T) / 2.0
        return MotionState(mean, cov)

    def innovation(self, state: MotionState, box: Box) -> np.ndarray:
        """Measurement residual of a box against the current (predicted) state."""
        z = box_to_measurement(box)
        projected_mean, _ = self.project(state)
        return z - projected_mean


def kalman_predict(state: MotionState, kf: KalmanFilter | None = None) -> MotionState:
    return (kf or KalmanFilter()).predict(state)


def kalman_update(state: MotionState, box: Box, kf: KalmanFilter | None = None) -> MotionState:
    return (kf or KalmanFilter()).update(state, box)
