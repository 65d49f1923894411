"""Side-scan sonar measurements, synthetic pings and likelihoods.

A landmark measurement is a :class:`SlantRangePair` or ``None``; ``None``
stands for "not detected", which the likelihood evaluates as the point
``(r_max, r_max)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .geometry import (
    Landmark,
    SlantRangePair,
    as_landmark_map,
    clip_swaths,
    slant_from_clip,
    slant_ranges,
    swath_landmark_intersection,
)
from . import _kernels
from .motion import VehicleState, wrap_angle

LandmarkMeasurement = Optional[SlantRangePair]


@dataclass(frozen=True)
class SensorParams:
    r_max: float = 20.0
    var_r: float = 2.5
    var_a: float = 0.5
    var_c: float = 0.2
    pixels_per_side: int = 400

    def __post_init__(self):
        if not self.r_max > 0:
            raise ValueError(f"r_max must be positive, got {self.r_max}")
        for name in ("var_r", "var_a", "var_c"):
            # the likelihoods are Gaussian densities and need a positive width
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.pixels_per_side < 1:
            raise ValueError("pixels_per_side must be at least 1")

    @property
    def resolution(self) -> float:
        return self.r_max / self.pixels_per_side


@dataclass
class JointMeasurement:
    """Landmark detections plus altimeter and compass readings for one ping.

    Only detected landmarks are stored; every other map index is implicitly
    "not detected".
    """

    detected: dict  # landmark index -> SlantRangePair
    map_size: int
    altitude: float
    compass: float

    @classmethod
    def from_list(cls, landmarks: Sequence[LandmarkMeasurement], altitude: float,
                  compass: float) -> "JointMeasurement":
        detected = {d: SlantRangePair(*z) for d, z in enumerate(landmarks) if z is not None}
        return cls(detected, len(landmarks), altitude, compass)

    @property
    def landmarks(self) -> list:
        out: list = [None] * self.map_size
        for d, z in self.detected.items():
            out[d] = z
        return out


@dataclass
class PingLine:
    """One received ping as two binary pixel rows with landmark labels.

    Pixel ``p`` of either side covers slant ranges ``[p*res, (p+1)*res)``
    measured outward from the vehicle.  Labels are ``-1`` where no landmark is
    present.
    """

    port: np.ndarray
    starboard: np.ndarray
    port_labels: np.ndarray
    starboard_labels: np.ndarray
    resolution: float

    @classmethod
    def empty(cls, pixels: int, resolution: float) -> "PingLine":
        return cls(
            np.zeros(pixels, dtype=np.uint8),
            np.zeros(pixels, dtype=np.uint8),
            np.full(pixels, -1, dtype=np.int64),
            np.full(pixels, -1, dtype=np.int64),
            resolution,
        )

    def image_row(self) -> np.ndarray:
        """Port (reversed, far range on the left) followed by starboard."""
        return np.concatenate([self.port[::-1], self.starboard])


# --- model-level measurements -------------------------------------------------


def perturb_ranges(ranges: SlantRangePair, altitude: float, sensor: SensorParams,
                   noise) -> SlantRangePair:
    """Add range noise, keep the result inside ``[altitude, r_max - res]``, re-sort."""
    lo, hi = abs(altitude), sensor.r_max - sensor.resolution
    a = min(max(ranges.near + noise[0], lo), hi)
    b = min(max(ranges.far + noise[1], lo), hi)
    return SlantRangePair(min(a, b), max(a, b))


def noiseless_ranges(state: VehicleState, landmark: Landmark, sensor: SensorParams) -> LandmarkMeasurement:
    points = swath_landmark_intersection(landmark, state, sensor.r_max)
    if points is None:
        return None
    return slant_ranges(points[0], points[1], state)


def measure_landmark(state: VehicleState, landmark: Landmark, sensor: SensorParams,
                     rng: np.random.Generator) -> LandmarkMeasurement:
    clean = noiseless_ranges(state, landmark, sensor)
    if clean is None:
        return None
    noise = rng.standard_normal(2) * math.sqrt(sensor.var_r)
    return perturb_ranges(clean, state.altitude, sensor, noise)


def measure_altitude_compass(state: VehicleState, sensor: SensorParams,
                             rng: np.random.Generator) -> tuple[float, float]:
    n = rng.standard_normal(2)
    z_a = state.altitude + n[0] * math.sqrt(sensor.var_a)
    z_c = wrap_angle(state.heading + n[1] * math.sqrt(sensor.var_c))
    return z_a, z_c


def measure_landmarks(state: VehicleState, landmarks, sensor: SensorParams,
                      rng: np.random.Generator) -> dict:
    """Noisy measurements of every landmark the swath crosses, keyed by map index."""
    lmap = as_landmark_map(landmarks)
    out: dict = {}
    idx = lmap.candidates(np.array([[state.x, state.y]]), sensor.r_max)
    if idx.size == 0:
        return out
    hit, t0, t1, half = clip_swaths(np.array([state], dtype=float), lmap.array[idx], sensor.r_max)
    near, far = slant_from_clip(t0[0], t1[0], half[0], state.altitude)
    for j in np.flatnonzero(hit[0]):
        noise = rng.standard_normal(2) * math.sqrt(sensor.var_r)
        out[int(idx[j])] = perturb_ranges(SlantRangePair(near[j], far[j]), state.altitude, sensor, noise)
    return out


# --- synthetic pings ----------------------------------------------------------


def _mark(pixels, labels, r_lo, r_hi, label, res):
    n = pixels.size
    first = int(math.floor(r_lo / res + 1e-9))
    last = int(math.ceil(r_hi / res - 1e-9)) - 1
    first, last = max(first, 0), min(last, n - 1)
    if last < first:
        return
    sl = slice(first, last + 1)
    free = labels[sl] == -1
    # lower landmark id keeps contested pixels
    take = free | (labels[sl] > label)
    labels[sl] = np.where(take, label, labels[sl])
    pixels[sl] = 1


def rasterize_ping(state: VehicleState, landmarks: Sequence[Landmark] | np.ndarray,
                   sensor: SensorParams) -> PingLine:
    """Binary pixel line for one ping, from the noiseless swath geometry."""
    if state.altitude > sensor.r_max:
        raise ValueError(f"altitude {state.altitude} exceeds r_max {sensor.r_max}")
    lmap = as_landmark_map(landmarks)
    res = sensor.resolution
    ping = PingLine.empty(sensor.pixels_per_side, res)
    idx = lmap.candidates(np.array([[state.x, state.y]]), sensor.r_max)
    if idx.size == 0:
        return ping
    hit, t0, t1, half = clip_swaths(np.array([state], dtype=float), lmap.array[idx], sensor.r_max)
    half = half[0]
    g2 = state.altitude ** 2
    for j in np.flatnonzero(hit[0]):
        a, b = t0[0, j], t1[0, j]
        # t < 0.5 is port, t > 0.5 starboard; horizontal distance |t - 0.5| * 2 * half
        if a < 0.5:
            d_lo = (0.5 - min(b, 0.5)) * 2 * half
            d_hi = (0.5 - a) * 2 * half
            _mark(ping.port, ping.port_labels, math.sqrt(d_lo ** 2 + g2), math.sqrt(d_hi ** 2 + g2),
                  int(idx[j]), res)
        if b > 0.5:
            d_lo = (max(a, 0.5) - 0.5) * 2 * half
            d_hi = (b - 0.5) * 2 * half
            _mark(ping.starboard, ping.starboard_labels, math.sqrt(d_lo ** 2 + g2),
                  math.sqrt(d_hi ** 2 + g2), int(idx[j]), res)
    return ping


def _runs(pixels: np.ndarray):
    padded = np.concatenate([[0], pixels.astype(np.int8), [0]])
    edges = np.flatnonzero(np.diff(padded))
    return zip(edges[::2], edges[1::2] - 1)


def extract_measurements(ping: PingLine, map_size: int, sensor: SensorParams) -> list:
    """Slant-range pairs per landmark from the edges of labelled pixel runs.

    A landmark seen on both sides (straddling the track) is reported by the
    far edge of each side's run, matching the two boundary crossings of the
    swath.
    """
    res = sensor.resolution
    found: dict[int, dict[str, tuple[float, float]]] = {}
    for side, pixels, labels in (("port", ping.port, ping.port_labels),
                                 ("starboard", ping.starboard, ping.starboard_labels)):
        for first, last in _runs(pixels):
            run_labels = labels[first:last + 1]
            if np.any(run_labels < 0):
                raise ValueError(f"unlabelled set pixel in {side} run {first}..{last}")
            # adjacent landmarks can share one run; split where the label changes
            bounds = np.flatnonzero(np.diff(run_labels)) + 1
            for seg in np.split(np.arange(first, last + 1), bounds):
                d = int(labels[seg[0]])
                if not 0 <= d < map_size:
                    raise ValueError(f"label {d} outside map of size {map_size}")
                near, far = seg[0] * res, (seg[-1] + 1) * res
                prev = found.setdefault(d, {}).get(side)
                if prev is not None:
                    near, far = min(prev[0], near), max(prev[1], far)
                found[d][side] = (near, far)

    out: list = [None] * map_size
    for d, sides in found.items():
        if len(sides) == 2:
            a, b = sides["port"][1], sides["starboard"][1]
            out[d] = SlantRangePair(min(a, b), max(a, b))
        else:
            (near, far), = sides.values()
            out[d] = SlantRangePair(near, far)
    return out


def write_pgm(pings: Sequence[PingLine], path) -> None:
    """Plain-text grey map, one ping per row, pixel values 0/1."""
    path = Path(path)
    rows = [p.image_row() for p in pings]
    width = rows[0].size if rows else 0
    try:
        with path.open("w") as fh:
            fh.write(f"P2 {width} {len(rows)} 1\n")
            for r in rows:
                fh.write(" ".join(map(str, r.tolist())))
                fh.write("\n")
    except OSError as exc:
        raise OSError(f"cannot write ping image to {path}: {exc}") from exc


# --- likelihoods --------------------------------------------------------------


def _log_gauss2(r1, r2, z1, z2, var):
    return -math.log(2 * math.pi * var) - ((z1 - r1) ** 2 + (z2 - r2) ** 2) / (2 * var)


def _log_gauss1(residual, var):
    return -0.5 * math.log(2 * math.pi * var) - residual * residual / (2 * var)


def landmark_log_likelihood(z_d: LandmarkMeasurement, hyp: VehicleState, landmark: Landmark,
                            sensor: SensorParams) -> float:
    predicted = noiseless_ranges(hyp, landmark, sensor) if hyp.altitude <= sensor.r_max else None
    if predicted is None:
        return 0.0 if z_d is None else -math.inf
    z1, z2 = (sensor.r_max, sensor.r_max) if z_d is None else z_d
    return _log_gauss2(predicted.near, predicted.far, z1, z2, sensor.var_r)


def altitude_log_likelihood(z_a: float, hyp: VehicleState, sensor: SensorParams) -> float:
    return _log_gauss1(z_a - hyp.altitude, sensor.var_a)


def compass_log_likelihood(z_c: float, hyp: VehicleState, sensor: SensorParams) -> float:
    return _log_gauss1(wrap_angle(z_c - hyp.heading), sensor.var_c)


def joint_log_likelihood(z: JointMeasurement, hyp: VehicleState, landmarks: Sequence[Landmark],
                         sensor: SensorParams) -> float:
    if z.map_size != len(landmarks):
        raise ValueError(f"measurement covers {z.map_size} landmarks, map has {len(landmarks)}")
    total = compass_log_likelihood(z.compass, hyp, sensor)
    total += altitude_log_likelihood(z.altitude, hyp, sensor)
    for d, lm in enumerate(landmarks):
        total += landmark_log_likelihood(z.detected.get(d), hyp, lm, sensor)
    return total


def joint_log_likelihood_batch(z: JointMeasurement, states: np.ndarray, landmarks,
                               sensor: SensorParams) -> np.ndarray:
    """Joint log-likelihood of ``(I, 4)`` state hypotheses.

    Landmarks out of every hypothesis' reach contribute exactly zero unless
    they were detected, in which case every hypothesis gets ``-inf``.
    """
    states = np.ascontiguousarray(np.atleast_2d(states), dtype=float)
    lmap = as_landmark_map(landmarks)
    if z.map_size != len(lmap):
        raise ValueError(f"measurement covers {z.map_size} landmarks, map has {len(lmap)}")
    out = np.empty(states.shape[0])
    cand = lmap.candidates(states[:, :2], sensor.r_max) if len(lmap) else np.empty(0, dtype=np.int64)
    if z.detected and not set(z.detected).issubset(cand.tolist()):
        out.fill(-np.inf)
        return out
    z1 = np.full(cand.size, sensor.r_max)
    z2 = np.full(cand.size, sensor.r_max)
    detected = np.zeros(cand.size, dtype=np.bool_)
    if z.detected:
        for j, d in enumerate(cand.tolist()):
            if d in z.detected:
                z1[j], z2[j] = z.detected[d]
                detected[j] = True
    _kernels.joint_loglik(states, float(z.altitude), float(z.compass), sensor.var_a, sensor.var_c,
                          lmap.array[cand], z1, z2, detected, sensor.r_max, sensor.var_r, out)
    return out
