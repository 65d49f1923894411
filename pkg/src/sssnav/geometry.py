"""Planar geometry of the sonar swath and rectangular seafloor landmarks.

Scalar helpers work on small named tuples and follow the textbook
construction (swath segment against each rectangle side).  The batch routine
:func:`clip_swaths` clips many swaths against many rectangles at once in the
rectangles' local frames and is what the filter uses per particle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from . import _kernels
from .motion import VehicleState

EPS = 1e-9


class Point2(NamedTuple):
    x: float
    y: float


class Segment2(NamedTuple):
    begin: Point2
    end: Point2

    @property
    def length(self) -> float:
        return math.hypot(self.end.x - self.begin.x, self.end.y - self.begin.y)


class SlantRangePair(NamedTuple):
    near: float
    far: float


@dataclass(frozen=True)
class Landmark:
    """Oriented rectangle on the seafloor.

    ``length`` runs along the rectangle's local x axis, which points at
    ``orientation`` radians (0 = east, pi/2 = north).
    """

    x: float
    y: float
    orientation: float
    length: float
    width: float

    def __post_init__(self):
        if not (self.length > 0 and self.width > 0):
            raise ValueError(f"landmark length and width must be positive, got {self.length}, {self.width}")
        if not (-math.pi < self.orientation <= math.pi):
            raise ValueError(f"landmark orientation {self.orientation} outside (-pi, pi]")

    @property
    def center(self) -> Point2:
        return Point2(self.x, self.y)

    @property
    def half_diagonal(self) -> float:
        return 0.5 * math.hypot(self.length, self.width)

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.orientation, self.length, self.width])


def landmarks_to_array(landmarks) -> np.ndarray:
    """Stack landmarks into an ``(D, 5)`` array of ``[x, y, theta, l, w]``."""
    if len(landmarks) == 0:
        return np.empty((0, 5))
    return np.array([lm.as_array() for lm in landmarks], dtype=float)


class LandmarkMap:
    """Landmark array with an x-sorted index for fast reach queries."""

    def __init__(self, landmarks):
        arr = landmarks if isinstance(landmarks, np.ndarray) else landmarks_to_array(landmarks)
        self.array = np.asarray(arr, dtype=float).reshape(-1, 5)
        self._order = np.argsort(self.array[:, 0], kind="stable")
        self._sorted_x = self.array[self._order, 0]
        self._sorted_y = self.array[self._order, 1]
        diag = np.hypot(self.array[:, 3], self.array[:, 4]) / 2
        self.max_half_diagonal = float(diag.max()) if diag.size else 0.0

    def __len__(self):
        return self.array.shape[0]

    def candidates(self, positions: np.ndarray, r_max: float) -> np.ndarray:
        """Sorted indices of landmarks some position's swath could reach.

        Conservative: uses the bounding box of ``positions`` grown by
        ``r_max`` plus the largest landmark half-diagonal.
        """
        if len(self) == 0:
            return np.empty(0, dtype=np.int64)
        positions = np.atleast_2d(positions)
        reach = r_max + self.max_half_diagonal
        xs, ys = positions[:, 0], positions[:, 1]
        lo = np.searchsorted(self._sorted_x, xs.min() - reach, side="left")
        hi = np.searchsorted(self._sorted_x, xs.max() + reach, side="right")
        sy = self._sorted_y[lo:hi]
        keep = (sy >= ys.min() - reach) & (sy <= ys.max() + reach)
        return np.sort(self._order[lo:hi][keep])


def as_landmark_map(landmarks) -> LandmarkMap:
    return landmarks if isinstance(landmarks, LandmarkMap) else LandmarkMap(landmarks)


def swath_half_width(altitude: float, r_max: float) -> float:
    if altitude > r_max:
        raise ValueError(f"altitude {altitude} exceeds maximum slant range {r_max}: no seafloor in range")
    return math.sqrt(max(r_max * r_max - altitude * altitude, 0.0))


def swath_endpoints(state: VehicleState, r_max: float) -> Segment2:
    """Port (begin) and starboard (end) ends of the ensonified seafloor line."""
    half = swath_half_width(abs(state.altitude), r_max)
    ox = math.cos(state.heading + math.pi / 2) * half
    oy = math.sin(state.heading + math.pi / 2) * half
    port = Point2(state.x + ox, state.y + oy)
    starboard = Point2(state.x - ox, state.y - oy)
    return Segment2(port, starboard)


def landmark_corners(landmark: Landmark) -> list[Point2]:
    """Corners in the order (-,-), (+,-), (+,+), (-,+) of the local frame."""
    c, s = math.cos(landmark.orientation), math.sin(landmark.orientation)
    hl, hw = landmark.length / 2, landmark.width / 2
    corners = []
    for a, b in ((-hl, -hw), (hl, -hw), (hl, hw), (-hl, hw)):
        corners.append(Point2(landmark.x + c * a - s * b, landmark.y + s * a + c * b))
    return corners


def landmark_sides(landmark: Landmark) -> list[Segment2]:
    """South, east, north and west sides for an unrotated landmark.

    Each side begins at the corner where the previous one ended, so the four
    segments walk the boundary counter-clockwise.
    """
    corners = landmark_corners(landmark)
    return [Segment2(corners[i], corners[(i + 1) % 4]) for i in range(4)]


def _cross(ax, ay, bx, by):
    return ax * by - ay * bx


def segment_intersection(a: Segment2, b: Segment2, tol: float = EPS) -> list[Point2]:
    """Intersection of two closed segments.

    Returns an empty list, one point, or (for collinear overlap) the two ends
    of the shared piece.
    """
    px, py = a.begin
    rx, ry = a.end.x - px, a.end.y - py
    qx, qy = b.begin
    sx, sy = b.end.x - qx, b.end.y - qy
    denom = _cross(rx, ry, sx, sy)
    qpx, qpy = qx - px, qy - py
    rr = rx * rx + ry * ry
    ss = sx * sx + sy * sy

    if abs(denom) <= tol * max(math.sqrt(rr * ss), 1.0):
        # parallel; only collinear overlap matters
        if abs(_cross(qpx, qpy, rx, ry)) > tol * max(math.sqrt(rr), 1.0):
            return []
        if rr <= tol * tol:
            if ss <= tol * tol:
                return [a.begin] if math.hypot(qpx, qpy) <= tol else []
            t = ((px - qx) * sx + (py - qy) * sy) / ss
            return [a.begin] if -tol <= t <= 1 + tol else []
        t0 = (qpx * rx + qpy * ry) / rr
        t1 = t0 + (sx * rx + sy * ry) / rr
        lo, hi = max(min(t0, t1), 0.0), min(max(t0, t1), 1.0)
        if hi < lo - tol / math.sqrt(rr):
            return []
        p_lo = Point2(px + lo * rx, py + lo * ry)
        p_hi = Point2(px + hi * rx, py + hi * ry)
        return [p_lo] if (hi - lo) * math.sqrt(rr) <= tol else [p_lo, p_hi]

    t = _cross(qpx, qpy, sx, sy) / denom
    u = _cross(qpx, qpy, rx, ry) / denom
    ta = tol / max(math.sqrt(rr), tol)
    ub = tol / max(math.sqrt(ss), tol)
    if -ta <= t <= 1 + ta and -ub <= u <= 1 + ub:
        t = min(max(t, 0.0), 1.0)
        return [Point2(px + t * rx, py + t * ry)]
    return []


def point_in_landmark(p: Point2, landmark: Landmark, tol: float = EPS) -> bool:
    c, s = math.cos(landmark.orientation), math.sin(landmark.orientation)
    dx, dy = p.x - landmark.x, p.y - landmark.y
    lx = c * dx + s * dy
    ly = -s * dx + c * dy
    return abs(lx) <= landmark.length / 2 + tol and abs(ly) <= landmark.width / 2 + tol


def swath_landmark_intersection(
    landmark: Landmark, state: VehicleState, r_max: float
) -> Optional[tuple[Point2, Point2]]:
    """Entry and exit points of the swath through a landmark, port side first.

    ``None`` when the swath misses the rectangle or only touches it at a
    single point.  A swath end lying inside the rectangle stands in for the
    missing boundary crossing.
    """
    swath = swath_endpoints(state, r_max)
    length = swath.length
    if length <= EPS:
        return None
    dx = (swath.end.x - swath.begin.x) / length
    dy = (swath.end.y - swath.begin.y) / length

    hits = []
    for side in landmark_sides(landmark):
        hits.extend(segment_intersection(swath, side))
    for end in swath:
        if point_in_landmark(end, landmark):
            hits.append(end)
    if not hits:
        return None

    along = [(h.x - swath.begin.x) * dx + (h.y - swath.begin.y) * dy for h in hits]
    i_lo = int(np.argmin(along))
    i_hi = int(np.argmax(along))
    if along[i_hi] - along[i_lo] <= EPS:
        return None
    return hits[i_lo], hits[i_hi]


def slant_ranges(p1: Point2, p2: Point2, state: VehicleState) -> SlantRangePair:
    g2 = state.altitude * state.altitude
    r1 = math.sqrt((p1.x - state.x) ** 2 + (p1.y - state.y) ** 2 + g2)
    r2 = math.sqrt((p2.x - state.x) ** 2 + (p2.y - state.y) ** 2 + g2)
    return SlantRangePair(min(r1, r2), max(r1, r2))


def horizontal_from_slant(r_s: float, altitude: float) -> float:
    if r_s < altitude:
        raise ValueError(f"slant range {r_s} shorter than altitude {altitude}")
    return math.sqrt((r_s - altitude) * (r_s + altitude))


def clip_swaths(states: np.ndarray, landmarks: np.ndarray, r_max: float):
    """Clip swaths of many vehicle states against many rectangles.

    Parameters
    ----------
    states : (I, 4) array of ``[x, y, heading, altitude]``
    landmarks : (M, 5) array of ``[x, y, theta, length, width]``
    r_max : maximum slant range

    Returns
    -------
    hit : (I, M) bool
    t0, t1 : (I, M) swath parameters of the entry and exit points, where 0 is
        the port end, 1 the starboard end and 0.5 the vehicle.
    half : (I,) swath half-width (0 where the altitude exceeds ``r_max``)
    """
    states = np.ascontiguousarray(np.atleast_2d(states), dtype=float)
    landmarks = np.ascontiguousarray(landmarks, dtype=float).reshape(-1, 5)
    n, m = states.shape[0], landmarks.shape[0]
    hit = np.zeros((n, m), dtype=np.bool_)
    t0 = np.zeros((n, m))
    t1 = np.ones((n, m))
    half = np.sqrt(np.maximum(r_max * r_max - states[:, 3] ** 2, 0.0))
    _kernels.clip_table(states, landmarks, float(r_max), hit, t0, t1, half)
    return hit, t0, t1, half


def slant_from_clip(t0, t1, half, altitude):
    """Sorted slant ranges of the clip points given by :func:`clip_swaths`."""
    half = np.asarray(half)[..., None] if np.ndim(t0) > np.ndim(half) else half
    altitude = np.asarray(altitude)[..., None] if np.ndim(t0) > np.ndim(altitude) else altitude
    g2 = altitude * altitude
    r_a = np.sqrt(((t0 - 0.5) * 2 * half) ** 2 + g2)
    r_b = np.sqrt(((t1 - 0.5) * 2 * half) ** 2 + g2)
    return np.minimum(r_a, r_b), np.maximum(r_a, r_b)
