"""Scenario configuration: landmark grid, control schedule, noise and sensor settings.

Configs are flat TOML documents; every key is optional and unknown keys are
rejected.  See ``DEFAULTS`` for the key set.
"""

from __future__ import annotations

import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .geometry import Landmark, LandmarkMap
from .motion import ControlInput, DrivingNoiseParams, VehicleState
from .sonar import SensorParams


class ConfigError(ValueError):
    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key


DEFAULTS = {
    # landmark grid
    "spacing": 50.0,
    "extent": 3000.0,
    "landmark_length": 4.0,
    "landmark_width": 2.0,
    "landmark_orientation": 0.0,
    "use_landmarks": True,
    # trajectory
    "speed": 1.5,
    "turn_rate": 0.3,
    "leg_length": 400.0,
    "control_schedule": None,
    # driving noise
    "var_s": 1.5,
    "var_t": 0.5,
    "var_theta": 0.2,
    "var_gamma": 0.1,
    # sensors
    "r_max": 20.0,
    "var_r": 2.5,
    "var_a": 0.5,
    "var_c": 0.2,
    "pixels_per_side": 400,
    "pixel_pipeline": False,
    # run
    "dt": 0.1,
    "steps": 12000,
    "seed": 0,
    "initial_x": 0.0,
    "initial_y": 0.0,
    "initial_heading": 0.0,
    "initial_altitude": 5.0,
    "initial_cov": None,
    "altitude_min": 2.0,
    "altitude_max": 10.0,
    "particle_count": 1000,
    "ping_stride": 1,
}

_INT_KEYS = {"steps", "seed", "particle_count", "ping_stride", "pixels_per_side"}
_BOOL_KEYS = {"use_landmarks", "pixel_pipeline"}


@dataclass
class Scenario:
    landmarks: list
    control_schedule: list  # (duration_s, ControlInput)
    noise: DrivingNoiseParams
    sensor: SensorParams
    dt: float
    steps: int
    initial_state: VehicleState
    initial_cov: np.ndarray
    particle_count: int = 1000
    ping_stride: int = 1
    pixel_pipeline: bool = False
    altitude_band: tuple = (2.0, 10.0)
    seed: int = 0
    spacing: float = 50.0
    landmark_map: LandmarkMap = field(init=False, repr=False)

    def __post_init__(self):
        self.landmark_map = LandmarkMap(self.landmarks)

    def controls(self) -> np.ndarray:
        """Per-step ``(steps, 2)`` array of ``[speed, turn_rate]``."""
        out = np.empty((self.steps, 2))
        k = 0
        t_end = 0.0
        for duration, u in self.control_schedule:
            t_end += duration
            # step k covers (k*dt, (k+1)*dt]; assign it to the segment holding its start
            while k < self.steps and k * self.dt < t_end - 1e-9:
                out[k] = u
                k += 1
        if k < self.steps:
            raise ConfigError("control_schedule", f"covers {t_end:.6g} s, run needs {self.steps * self.dt:.6g} s")
        return out


def grid_landmarks(spacing: float, extent: float, length: float, width: float,
                   orientation: float = 0.0) -> list[Landmark]:
    """Square grid of identical landmarks centred on the origin."""
    n = int(math.floor(extent / 2 / spacing + 1e-9))
    coords = np.arange(-n, n + 1) * spacing
    return [Landmark(float(x), float(y), orientation, length, width) for y in coords for x in coords]


def lawnmower_schedule(total_time: float, speed: float, turn_rate: float,
                       leg_length: float) -> list:
    """Straight legs joined by alternating 180 degree turns."""
    leg_time = leg_length / speed
    turn_time = math.pi / abs(turn_rate)
    schedule = []
    t = 0.0
    sign = 1.0
    while t < total_time:
        schedule.append((leg_time, ControlInput(speed, 0.0)))
        schedule.append((turn_time, ControlInput(speed, sign * abs(turn_rate))))
        t += leg_time + turn_time
        sign = -sign
    return schedule


def _coerce(key, value):
    default = DEFAULTS[key]
    if key in _BOOL_KEYS:
        if not isinstance(value, bool):
            raise ConfigError(key, f"expected true/false, got {value!r}")
        return value
    if key == "control_schedule":
        try:
            rows = [(float(d), ControlInput(float(s), float(t))) for d, s, t in value]
        except (TypeError, ValueError):
            raise ConfigError(key, "expected a list of [duration, speed, turn_rate] rows") from None
        if any(d <= 0 for d, _ in rows):
            raise ConfigError(key, "durations must be positive")
        return rows
    if key == "initial_cov":
        try:
            diag = [float(v) for v in value]
        except (TypeError, ValueError):
            raise ConfigError(key, "expected four variances [x, y, heading, altitude]") from None
        if len(diag) != 4 or any(v < 0 for v in diag):
            raise ConfigError(key, "expected four non-negative variances [x, y, heading, altitude]")
        return diag
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(key, f"expected a number, got {value!r}")
    if key in _INT_KEYS:
        if float(value) != int(value):
            raise ConfigError(key, f"expected an integer, got {value!r}")
        return int(value)
    return float(value)


def scenario_from_dict(raw: dict) -> Scenario:
    unknown = sorted(set(raw) - set(DEFAULTS))
    if unknown:
        raise ConfigError(unknown[0], "unknown key")
    cfg = dict(DEFAULTS)
    for key, value in raw.items():
        cfg[key] = _coerce(key, value)

    positive = ("spacing", "extent", "landmark_length", "landmark_width", "dt", "r_max", "steps",
                "particle_count", "ping_stride", "pixels_per_side", "speed", "leg_length")
    for key in positive:
        if not cfg[key] > 0:
            raise ConfigError(key, f"must be positive, got {cfg[key]}")
    for key in ("var_r", "var_a", "var_c"):
        if not cfg[key] > 0:
            raise ConfigError(key, f"must be positive, got {cfg[key]}")
    for key in ("var_s", "var_t", "var_theta", "var_gamma"):
        if cfg[key] < 0:
            raise ConfigError(key, f"must be non-negative, got {cfg[key]}")
    if cfg["turn_rate"] == 0 and cfg["control_schedule"] is None:
        raise ConfigError("turn_rate", "lawnmower turns need a non-zero turn rate")
    if cfg["particle_count"] < 2:
        raise ConfigError("particle_count", "need at least two particles")
    if not -math.pi < cfg["landmark_orientation"] <= math.pi:
        raise ConfigError("landmark_orientation", "must lie in (-pi, pi]")
    if not 0 <= cfg["altitude_min"] <= cfg["altitude_max"] <= cfg["r_max"]:
        raise ConfigError("altitude_max", "need 0 <= altitude_min <= altitude_max <= r_max")
    if not cfg["altitude_min"] <= cfg["initial_altitude"] <= cfg["altitude_max"]:
        raise ConfigError("initial_altitude", "must lie within [altitude_min, altitude_max]")

    sensor = SensorParams(cfg["r_max"], cfg["var_r"], cfg["var_a"], cfg["var_c"], cfg["pixels_per_side"])
    noise = DrivingNoiseParams(cfg["var_s"], cfg["var_t"], cfg["var_theta"], cfg["var_gamma"])
    total = cfg["steps"] * cfg["dt"]
    schedule = cfg["control_schedule"]
    if schedule is None:
        schedule = lawnmower_schedule(total, cfg["speed"], cfg["turn_rate"], cfg["leg_length"])
    elif sum(d for d, _ in schedule) < total - 1e-9:
        raise ConfigError("control_schedule", f"durations sum to less than steps * dt = {total:.6g} s")

    if cfg["initial_cov"] is None:
        # heading gets the compass variance, altitude the altimeter variance
        diag = [cfg["var_r"], cfg["var_r"], cfg["var_c"], cfg["var_a"]]
    else:
        diag = cfg["initial_cov"]

    landmarks = []
    if cfg["use_landmarks"]:
        landmarks = grid_landmarks(cfg["spacing"], cfg["extent"], cfg["landmark_length"],
                                   cfg["landmark_width"], cfg["landmark_orientation"])
    return Scenario(
        landmarks=landmarks,
        control_schedule=schedule,
        noise=noise,
        sensor=sensor,
        dt=cfg["dt"],
        steps=cfg["steps"],
        initial_state=VehicleState(cfg["initial_x"], cfg["initial_y"], cfg["initial_heading"],
                                   cfg["initial_altitude"]),
        initial_cov=np.diag(diag).astype(float),
        particle_count=cfg["particle_count"],
        ping_stride=cfg["ping_stride"],
        pixel_pipeline=cfg["pixel_pipeline"],
        altitude_band=(cfg["altitude_min"], cfg["altitude_max"]),
        seed=cfg["seed"],
        spacing=cfg["spacing"],
    )


def load_scenario(config_text: str) -> Scenario:
    try:
        raw = tomllib.loads(config_text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError("<config>", f"not valid key = value text: {exc}") from None
    nested = [k for k, v in raw.items() if isinstance(v, dict)]
    if nested:
        raise ConfigError(nested[0], "tables are not supported; use flat keys")
    return scenario_from_dict(raw)


def load_scenario_file(path) -> Scenario:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError("--config", f"cannot read {path}: {exc.strerror}") from None
    return load_scenario(text)
