import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import dense_swath_oracle, random_swath_case
from sssnav.geometry import (
    Landmark,
    LandmarkMap,
    Point2,
    Segment2,
    clip_swaths,
    horizontal_from_slant,
    landmark_corners,
    landmark_sides,
    point_in_landmark,
    segment_intersection,
    slant_from_clip,
    slant_ranges,
    swath_endpoints,
    swath_landmark_intersection,
)
from sssnav.motion import VehicleState

angles = st.floats(-math.pi, math.pi, exclude_min=True)
coords = st.floats(-50, 50)


@pytest.mark.parametrize(
    "state, r_max, port, stbd",
    [
        (VehicleState(0, 0, 0, 12), 20, (0, 16), (0, -16)),
        (VehicleState(0, 0, math.pi / 2, 0), 20, (-20, 0), (20, 0)),
        (VehicleState(3, 4, 0, 20), 20, (3, 4), (3, 4)),
    ],
)
def test_swath_endpoints_examples(state, r_max, port, stbd):
    seg = swath_endpoints(state, r_max)
    assert seg.begin == pytest.approx(port, abs=1e-12)
    assert seg.end == pytest.approx(stbd, abs=1e-12)


def test_swath_endpoints_rejects_altitude_above_range():
    with pytest.raises(ValueError, match="exceeds"):
        swath_endpoints(VehicleState(0, 0, 0, 21), 20)


@given(coords, coords, angles, st.floats(0, 1), st.floats(1, 40))
def test_swath_is_perpendicular_and_symmetric(x, y, th, frac, r_max):
    g = frac * r_max
    seg = swath_endpoints(VehicleState(x, y, th, g), r_max)
    half = math.sqrt(r_max**2 - g**2)
    for p in seg:
        assert math.hypot(p.x - x, p.y - y) == pytest.approx(half, abs=1e-9)
    dx, dy = seg.end.x - seg.begin.x, seg.end.y - seg.begin.y
    assert abs(dx * math.cos(th) + dy * math.sin(th)) < 1e-9


@pytest.mark.parametrize(
    "lm, expected",
    [
        (Landmark(10, 5, 0, 4, 2), [(8, 4), (12, 4), (12, 6), (8, 6)]),
        (Landmark(0, 0, math.pi / 2, 4, 2), [(1, -2), (1, 2), (-1, 2), (-1, -2)]),
    ],
)
def test_landmark_corner_examples(lm, expected):
    got = sorted(tuple(np.round(c, 12)) for c in landmark_corners(lm))
    assert got == sorted(tuple(map(float, e)) for e in expected)


def test_rotated_corner_from_rotation_matrix():
    lm = Landmark(0, 0, math.pi / 4, 4, 2)
    # local (2, 1) under a 45 degree rotation
    c = math.sqrt(0.5)
    expected = (2 * c - 1 * c, 2 * c + 1 * c)
    assert expected == pytest.approx((0.70711, 2.12132), abs=1e-5)
    assert any(math.hypot(p.x - expected[0], p.y - expected[1]) < 1e-12 for p in landmark_corners(lm))


def test_unrotated_sides_walk_south_east_north_west():
    south, east, north, west = landmark_sides(Landmark(10, 5, 0, 4, 2))
    assert south == Segment2(Point2(8, 4), Point2(12, 4))
    assert east == Segment2(Point2(12, 4), Point2(12, 6))
    assert north == Segment2(Point2(12, 6), Point2(8, 6))
    assert west == Segment2(Point2(8, 6), Point2(8, 4))


@given(coords, coords, angles, st.floats(0.1, 20), st.floats(0.1, 20))
def test_rectangle_shape_invariants(x, y, th, l, w):
    lm = Landmark(x, y, th, l, w)
    corners = landmark_corners(lm)
    for c in corners:
        assert math.hypot(c.x - x, c.y - y) == pytest.approx(math.hypot(l, w) / 2, abs=1e-9)
    sides = landmark_sides(lm)
    vec = [(s.end.x - s.begin.x, s.end.y - s.begin.y) for s in sides]
    for i in range(4):
        a, b = vec[i], vec[(i + 1) % 4]
        assert abs(a[0] * b[0] + a[1] * b[1]) < 1e-9 * max(l, w) ** 2
        opp = vec[(i + 2) % 4]
        assert a[0] == pytest.approx(-opp[0], abs=1e-9)
        assert a[1] == pytest.approx(-opp[1], abs=1e-9)


@pytest.mark.parametrize(
    "bad",
    [dict(length=0), dict(width=-1), dict(orientation=-math.pi), dict(orientation=4.0)],
)
def test_landmark_validation(bad):
    kw = dict(x=0, y=0, orientation=0, length=1, width=1) | bad
    with pytest.raises(ValueError):
        Landmark(**kw)


def test_segment_intersection_cases():
    a = Segment2(Point2(0, 0), Point2(2, 2))
    assert segment_intersection(a, Segment2(Point2(0, 2), Point2(2, 0))) == [Point2(1, 1)]
    assert segment_intersection(a, Segment2(Point2(3, 0), Point2(4, 0))) == []
    # collinear overlap returns both ends of the shared piece
    overlap = segment_intersection(a, Segment2(Point2(1, 1), Point2(5, 5)))
    assert overlap == [Point2(1, 1), Point2(2, 2)]
    # parallel, not collinear
    assert segment_intersection(a, Segment2(Point2(0, 1), Point2(2, 3))) == []


class TestSwathLandmarkIntersection:
    vehicle = VehicleState(0, 0, 0, 0)

    def test_crossing_points(self):
        hit = swath_landmark_intersection(Landmark(0, 10, 0, 4, 2), self.vehicle, 20)
        assert hit is not None
        # port side (+y) first
        assert hit[0] == pytest.approx((0, 11), abs=1e-12)
        assert hit[1] == pytest.approx((0, 9), abs=1e-12)

    @pytest.mark.parametrize("center", [(30, 0), (0, 25)])
    def test_misses(self, center):
        assert swath_landmark_intersection(Landmark(*center, 0, 4, 2), self.vehicle, 20) is None

    def test_swath_end_inside_rectangle_completes_the_pair(self):
        hit = swath_landmark_intersection(Landmark(0, 20, 0, 4, 2), self.vehicle, 20)
        pts = sorted(p.y for p in hit)
        assert pts == pytest.approx([19, 20])

    def test_single_corner_touch_is_not_a_detection(self):
        # diamond to the right of the swath whose left corner sits on x = 0
        lm = Landmark(math.sqrt(2), 10, math.pi / 4, 2, 2)
        assert min(c.x for c in landmark_corners(lm)) == pytest.approx(0, abs=1e-12)
        assert swath_landmark_intersection(lm, self.vehicle, 20) is None

    def test_swath_along_a_side(self):
        lm = Landmark(2, 10, 0, 4, 2)  # west side lies on x = 0
        hit = swath_landmark_intersection(lm, self.vehicle, 20)
        assert sorted(p.y for p in hit) == pytest.approx([9, 11])

    def test_zero_length_swath(self):
        assert swath_landmark_intersection(Landmark(0, 0, 0, 4, 2), VehicleState(0, 0, 0, 20), 20) is None


def test_matches_dense_sampling_oracle():
    rng = np.random.default_rng(11)
    checked = hits = 0
    for _ in range(200):
        lm, state, r_max = random_swath_case(rng)
        flag, entry, exit_, near = dense_swath_oracle(lm, state, r_max)
        if near:
            continue
        got = swath_landmark_intersection(Landmark(*lm), VehicleState(*state), r_max)
        assert (got is not None) == flag
        if flag:
            hits += 1
            assert np.hypot(*(np.array(got[0]) - entry)) < 1e-6
            assert np.hypot(*(np.array(got[1]) - exit_)) < 1e-6
        checked += 1
    assert checked > 190 and hits > 20


def test_batch_clip_agrees_with_scalar_route():
    rng = np.random.default_rng(5)
    for _ in range(300):
        lm, state, r_max = random_swath_case(rng)
        hit, t0, t1, half = clip_swaths(np.array([state]), np.array([lm]), r_max)
        ref = swath_landmark_intersection(Landmark(*lm), VehicleState(*state), r_max)
        assert bool(hit[0, 0]) == (ref is not None)
        if ref is not None:
            seg = swath_endpoints(VehicleState(*state), r_max)
            for t, p in ((t0[0, 0], ref[0]), (t1[0, 0], ref[1])):
                q = (seg.begin.x + t * (seg.end.x - seg.begin.x), seg.begin.y + t * (seg.end.y - seg.begin.y))
                assert q == pytest.approx(tuple(p), abs=1e-9)
            near, far = slant_from_clip(t0[0, 0], t1[0, 0], half[0], state[3])
            assert (near, far) == pytest.approx(tuple(slant_ranges(*ref, VehicleState(*state))), abs=1e-9)


@given(coords, coords, angles, st.floats(0, 19), st.floats(-30, 30), st.floats(-30, 30), angles,
       st.floats(0.2, 8), st.floats(0.2, 8))
@settings(max_examples=300)
def test_two_point_contract(x, y, th, g, lx, ly, lt, l, w):
    lm = Landmark(x + lx, y + ly, lt, l, w)
    state = VehicleState(x, y, th, g)
    got = swath_landmark_intersection(lm, state, 20)
    if got is None:
        return
    assert len(got) == 2
    seg = swath_endpoints(state, 20)
    for p in got:
        assert point_in_landmark(p, lm, tol=1e-9)
        # on the swath: distance to the line and within its span
        d1 = math.hypot(p.x - seg.begin.x, p.y - seg.begin.y)
        d2 = math.hypot(p.x - seg.end.x, p.y - seg.end.y)
        assert d1 + d2 == pytest.approx(seg.length, abs=1e-9)


@pytest.mark.parametrize(
    "gamma, expected",
    [(0, (9, 11)), (12, (15, 16.27882))],
)
def test_slant_range_examples(gamma, expected):
    got = slant_ranges(Point2(0, 9), Point2(0, 11), VehicleState(0, 0, 0, gamma))
    assert tuple(got) == pytest.approx(expected, abs=1e-5)
    assert got.near == pytest.approx(15 if gamma else 9)
    assert got.far == pytest.approx(math.sqrt(121 + gamma**2))


def test_slant_ranges_at_nadir():
    assert tuple(slant_ranges(Point2(1, 1), Point2(1, 1), VehicleState(1, 1, 0, 7))) == (7, 7)


def test_slant_ranges_are_sorted():
    got = slant_ranges(Point2(0, 11), Point2(0, 9), VehicleState(0, 0, 0, 0))
    assert got.near <= got.far


@pytest.mark.parametrize("r_s, g, h", [(5, 3, 4), (7, 7, 0), (20, 12, 16)])
def test_horizontal_from_slant(r_s, g, h):
    assert horizontal_from_slant(r_s, g) == pytest.approx(h)


def test_horizontal_from_slant_rejects_short_range():
    with pytest.raises(ValueError):
        horizontal_from_slant(3, 4)


# below ~1 cm the horizontal offset is lost in the slant range's last bits
@given(st.one_of(st.just(0.0), st.floats(0.01, 100)), st.one_of(st.just(0.0), st.floats(1e-3, 50)))
def test_slant_horizontal_round_trip(h, g):
    r = slant_ranges(Point2(h, 0), Point2(h, 0), VehicleState(0, 0, 0, g)).near
    assert horizontal_from_slant(r, g) == pytest.approx(h, abs=1e-9)


def test_candidates_cover_every_reachable_landmark():
    rng = np.random.default_rng(2)
    lms = [Landmark(*rng.uniform(-100, 100, 2), rng.uniform(-3, 3), *rng.uniform(0.5, 6, 2)) for _ in range(300)]
    lmap = LandmarkMap(lms)
    for _ in range(50):
        pos = rng.uniform(-80, 80, 2) + rng.normal(0, 3, (40, 2))
        states = np.column_stack([pos, rng.uniform(-math.pi, math.pi, 40), rng.uniform(0, 10, 40)])
        hit = clip_swaths(states, lmap.array, 20)[0]
        reachable = set(np.flatnonzero(hit.any(axis=0)))
        cand = lmap.candidates(states, 20)
        assert reachable <= set(cand)
        assert np.all(np.diff(cand) > 0)
