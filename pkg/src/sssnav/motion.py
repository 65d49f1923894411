"""Coordinated-turn vehicle motion with noisy speed/turn-rate inputs."""

from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np

from . import _kernels

# below this turn rate the arc is replaced by its straight-line limit
STRAIGHT_TURN_RATE = _kernels.STRAIGHT_TURN_RATE


def wrap_angle(a):
    """Wrap angles into (-pi, pi]. Works on scalars and arrays."""
    w = math.pi - np.mod(math.pi - np.asarray(a, dtype=float), 2 * math.pi)
    return float(w) if np.ndim(w) == 0 else w


class VehicleState(NamedTuple):
    x: float
    y: float
    heading: float
    altitude: float

    def as_array(self) -> np.ndarray:
        return np.array(self, dtype=float)

    @classmethod
    def from_array(cls, a) -> "VehicleState":
        return cls(float(a[0]), float(a[1]), float(a[2]), float(a[3]))


class ControlInput(NamedTuple):
    speed: float
    turn_rate: float


class DrivingNoise(NamedTuple):
    n_s: float = 0.0
    n_t: float = 0.0
    n_theta: float = 0.0
    n_gamma: float = 0.0


class DrivingNoiseParams(NamedTuple):
    var_s: float
    var_t: float
    var_theta: float
    var_gamma: float

    def as_array(self) -> np.ndarray:
        return np.array(self, dtype=float)


def propagate(states: np.ndarray, speed, turn_rate, noise: np.ndarray, dt: float) -> np.ndarray:
    """Vectorised transition for ``(..., 4)`` states and ``(..., 4)`` noise.

    The noise columns are ``[n_s, n_t, n_theta, n_gamma]``. Heading is wrapped
    and altitude clamped at zero on output.
    """
    states = np.asarray(states, dtype=float)
    noise = np.asarray(noise, dtype=float)
    shape = np.broadcast_shapes(states.shape, noise.shape)
    s2 = np.ascontiguousarray(np.broadcast_to(states, shape)).reshape(-1, 4)
    n2 = np.ascontiguousarray(np.broadcast_to(noise, shape)).reshape(-1, 4)
    out = np.empty_like(s2)
    _kernels.propagate_rows(s2, float(speed), float(turn_rate), n2, float(dt), out)
    return out.reshape(shape)


def step(state: VehicleState, control: ControlInput, noise: DrivingNoise, dt: float) -> VehicleState:
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    out = propagate(np.asarray(state, dtype=float), control.speed, control.turn_rate,
                    np.asarray(noise, dtype=float), dt)
    return VehicleState.from_array(out)


def sample_driving_noise(params: DrivingNoiseParams, rng: np.random.Generator, size=None):
    """Independent zero-mean Gaussian driving noise.

    Returns a :class:`DrivingNoise` when ``size`` is None, else an array of
    shape ``(size, 4)``.
    """
    std = np.sqrt(params.as_array())
    if size is None:
        return DrivingNoise(*(rng.standard_normal(4) * std))
    return rng.standard_normal((size, 4)) * std
