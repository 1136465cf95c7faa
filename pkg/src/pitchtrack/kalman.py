"""Constant-velocity Kalman filter over box center, aspect ratio, height.

State is (cx, cy, a, h, vcx, vcy, va, vh). Filters are value-style: the
caller holds (mean, covariance) pairs and threads them through predict and
update, so one filter instance serves every track.

Velocities start with a diffuse prior (huge variance) instead of a tuned
one. The first update then collapses the velocity estimate onto the
measured displacement, which makes the filter exact on noise-free
constant-velocity input after a couple of cycles while the process noise
still smooths jittery input at steady state.
"""
from __future__ import annotations

import numpy as np

from .core import CenterForm
from .errors import NumericError

STATE_DIM = 8
MEAS_DIM = 4


class KalmanFilter:
    """Shared filter model; per-track state lives in (mean, cov) arrays."""

    def __init__(
        self,
        std_weight_position: float = 1.0 / 20,
        std_weight_velocity: float = 1.0 / 40,
        diffuse_velocity_std: float = 1000.0,
    ):
        self._std_weight_position = std_weight_position
        self._std_weight_velocity = std_weight_velocity
        self._diffuse_velocity_std = diffuse_velocity_std

        self._motion_mat = np.eye(STATE_DIM)
        for i in range(MEAS_DIM):
            self._motion_mat[i, MEAS_DIM + i] = 1.0
        self._update_mat = np.eye(MEAS_DIM, STATE_DIM)

    def initiate(self, measurement: CenterForm) -> tuple[np.ndarray, np.ndarray]:
        """New track state from an unassociated measurement."""
        z = np.array([measurement.cx, measurement.cy, measurement.a, measurement.h])
        mean = np.zeros(STATE_DIM)
        mean[:MEAS_DIM] = z

        h = measurement.h
        std = [
            2 * self._std_weight_position * h,
            2 * self._std_weight_position * h,
            1e-2,
            2 * self._std_weight_position * h,
            self._diffuse_velocity_std * h,
            self._diffuse_velocity_std * h,
            10.0,
            self._diffuse_velocity_std * h,
        ]
        covariance = np.diag(np.square(std))
        return mean, covariance

    def predict(
        self, mean: np.ndarray, covariance: np.ndarray
    ) -> tuple[np.ndarray, np.ndarray]:
        """Advance the state one frame under the constant-velocity model."""
        h = mean[3]
        std = [
            self._std_weight_position * h,
            self._std_weight_position * h,
            1e-2,
            self._std_weight_position * h,
            self._std_weight_velocity * h,
            self._std_weight_velocity * h,
            1e-5,
            self._std_weight_velocity * h,
        ]
        motion_cov = np.diag(np.square(std))

        mean = self._motion_mat @ mean
        covariance = (
            self._motion_mat @ covariance @ self._motion_mat.T + motion_cov
        )
        covariance = (covariance + covariance.T) / 2.0
        self._check_finite(mean, covariance)
        return mean, covariance

    def _measurement_noise(self, h: float) -> np.ndarray:
        std = [
            self._std_weight_position * h,
            self._std_weight_position * h,
            1e-1,
            self._std_weight_position * h,
        ]
        return np.diag(np.square(std))

    def project(
        self, mean: np.ndarray, covariance: np.ndarray
    ) -> tuple[np.ndarray, np.ndarray]:
        """State distribution projected into measurement space, noise added."""
        proj_mean = self._update_mat @ mean
        proj_cov = (
            self._update_mat @ covariance @ self._update_mat.T
            + self._measurement_noise(mean[3])
        )
        return proj_mean, proj_cov

    def update(
        self, mean: np.ndarray, covariance: np.ndarray, measurement: CenterForm
    ) -> tuple[np.ndarray, np.ndarray]:
        """Condition the state on a new measurement (Joseph-form update)."""
        proj_mean, proj_cov = self.project(mean, covariance)
        z = np.array([measurement.cx, measurement.cy, measurement.a, measurement.h])

        # gain = P H^T S^-1, solved rather than inverted
        pht = covariance @ self._update_mat.T
        try:
            gain = np.linalg.solve(proj_cov, pht.T).T
        except np.linalg.LinAlgError as exc:
            raise NumericError(f"singular innovation covariance: {exc}") from exc

        innovation = z - proj_mean
        new_mean = mean + gain @ innovation

        # Joseph form keeps the covariance PSD despite the huge diffuse
        # velocity terms that a plain P - K S K^T would cancel badly.
        ikh = np.eye(STATE_DIM) - gain @ self._update_mat
        noise = self._measurement_noise(mean[3])
        new_cov = ikh @ covariance @ ikh.T + gain @ noise @ gain.T
        new_cov = (new_cov + new_cov.T) / 2.0
        self._check_finite(new_mean, new_cov)
        return new_mean, new_cov

    @staticmethod
    def _check_finite(mean: np.ndarray, covariance: np.ndarray) -> None:
        if not (np.all(np.isfinite(mean)) and np.all(np.isfinite(covariance))):
            raise NumericError("filter state became non-finite")


def state_to_xyxy(mean: np.ndarray) -> np.ndarray:
    """Raw corner coordinates of the state's box; may leave the frame."""
    cx, cy, a, h = mean[:MEAS_DIM]
    w = a * h
    return np.array([cx - w / 2.0, cy - h / 2.0, cx + w / 2.0, cy + h / 2.0])
