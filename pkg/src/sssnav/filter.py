"""Navigation filter: sigma-point prediction, particle update, MMSE output.

The belief between steps is a single Gaussian.  Prediction pushes the 2N
sigma points of the noise-augmented Gaussian through the motion model;
the update draws fresh particles from the predicted Gaussian, weights them by
the joint measurement likelihood and refits a Gaussian.  Because particles
are redrawn every step there is no separate resampling stage.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .geometry import as_landmark_map
from .motion import ControlInput, DrivingNoiseParams, VehicleState, propagate, wrap_angle
from .sonar import JointMeasurement, SensorParams, joint_log_likelihood_batch

HEADING = 2
STATE_DIM = 4
AUG_DIM = 8
DEFAULT_PARTICLES = 1000
# 1 - sum(w^2) below this means under two effective particles
MIN_SHRINK = 0.5


class BeliefError(RuntimeError):
    """Covariance could not be factorised even after adding jitter."""


@dataclass
class GaussianBelief:
    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        self.mean = np.asarray(self.mean, dtype=float)
        self.cov = np.asarray(self.cov, dtype=float)


@dataclass
class AugmentedGaussian:
    mean: np.ndarray
    cov: np.ndarray


@dataclass
class SigmaPointSet:
    points: np.ndarray
    weights: np.ndarray


def augment(belief: GaussianBelief, noise: DrivingNoiseParams) -> AugmentedGaussian:
    mean = np.zeros(AUG_DIM)
    mean[:STATE_DIM] = belief.mean
    cov = np.zeros((AUG_DIM, AUG_DIM))
    cov[:STATE_DIM, :STATE_DIM] = belief.cov
    cov[STATE_DIM:, STATE_DIM:] = np.diag(noise.as_array())
    return AugmentedGaussian(mean, cov)


def cholesky_jitter(m: np.ndarray, jitter: float = 1e-9, retries: int = 3) -> np.ndarray:
    """Lower Cholesky factor, adding ``jitter * I`` (x10 per retry) on failure."""
    root, ok = _kernels.cholesky_jitter(np.ascontiguousarray(m, dtype=float), jitter, retries)
    if not ok:
        raise BeliefError("covariance is not positive semidefinite")
    return root


def sigma_points(aug: AugmentedGaussian) -> SigmaPointSet:
    n = aug.mean.size
    root = cholesky_jitter(n * aug.cov)
    points = np.concatenate([aug.mean + root.T, aug.mean - root.T])
    weights = np.full(2 * n, 1.0 / (2 * n))
    return SigmaPointSet(points, weights)


def weighted_moments(points: np.ndarray, weights: np.ndarray):
    """Weighted mean and covariance of ``(n, 4)`` states, heading treated circularly."""
    return _kernels.weighted_moments(np.ascontiguousarray(points, dtype=float),
                                     np.ascontiguousarray(weights, dtype=float), HEADING)


def predict(belief: GaussianBelief, control: ControlInput, noise: DrivingNoiseParams,
            dt: float) -> GaussianBelief:
    sp = sigma_points(augment(belief, noise))
    moved = np.empty((sp.points.shape[0], STATE_DIM))
    _kernels.propagate_rows(sp.points[:, :STATE_DIM], float(control.speed), float(control.turn_rate),
                            sp.points[:, STATE_DIM:], float(dt), moved)
    mean, cov = weighted_moments(moved, sp.weights)
    return GaussianBelief(mean, cov)


def draw_particles(belief: GaussianBelief, count: int, rng: np.random.Generator) -> np.ndarray:
    """``count`` states from the Gaussian with its mean and covariance matched exactly.

    Moment matching removes the sampling jitter that fresh draws would add
    to the mean every step; the unbiased covariance of the returned set
    equals ``belief.cov``.
    """
    root = cholesky_jitter(belief.cov)
    normals = rng.standard_normal((count, STATE_DIM))
    if count > STATE_DIM and not _kernels.moment_match(normals):
        raise BeliefError("particle draws are rank deficient")
    return _kernels.sample_particles(belief.mean, root, normals)[0]


def update(pred: GaussianBelief, z: JointMeasurement, landmarks, sensor: SensorParams,
           particle_count: int, rng: np.random.Generator):
    """Importance-sampling update with the predicted Gaussian as proposal.

    Returns ``(belief, degenerate)``. When no particle is compatible with the
    measurement, or fewer than two effectively carry the weight, the
    predicted belief comes back unchanged with ``degenerate=True``.
    """
    if particle_count < 2:
        raise ValueError("need at least two particles")
    lmap = as_landmark_map(landmarks)
    particles = draw_particles(pred, particle_count, rng)

    logw = joint_log_likelihood_batch(z, particles, lmap, sensor)
    w, ok = _kernels.normalized_weights(logw)
    if not ok:
        return pred, True
    # unbiased (reliability-weight) covariance; needs two effective particles
    shrink = 1.0 - float(np.dot(w, w))
    if shrink < MIN_SHRINK:
        return pred, True
    mean, cov = weighted_moments(particles, w)
    return GaussianBelief(mean, cov / shrink), False


def mmse_estimate(belief: GaussianBelief) -> VehicleState:
    m = belief.mean
    return VehicleState(float(m[0]), float(m[1]), wrap_angle(m[2]), float(m[3]))


def filter_step(belief: GaussianBelief, control: ControlInput, z: JointMeasurement | None, landmarks,
                sensor: SensorParams, noise: DrivingNoiseParams, dt: float,
                particle_count: int, rng: np.random.Generator):
    """One predict/update cycle. ``z=None`` skips the update (no ping processed)."""
    pred = predict(belief, control, noise, dt)
    if z is None:
        return pred, False
    return update(pred, z, landmarks, sensor, particle_count, rng)
