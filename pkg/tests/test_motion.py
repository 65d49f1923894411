import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from sssnav.motion import (
    ControlInput,
    DrivingNoise,
    DrivingNoiseParams,
    VehicleState,
    propagate,
    sample_driving_noise,
    step,
    wrap_angle,
)

finite = st.floats(-100, 100)
angles = st.floats(-math.pi, math.pi, exclude_min=True)


@pytest.mark.parametrize(
    "state, control, noise, dt, expected",
    [
        ((0, 0, 0, 5), (2, 0), (0, 0, 0, 0), 0.1, (0.2, 0, 0, 5)),
        # unit-radius quarter circle
        ((0, 0, 0, 0), (math.pi / 2, math.pi / 2), (0, 0, 0, 0), 1.0, (1, 1, math.pi / 2, 0)),
        ((0, 0, 0, 5), (0, 0), (0, 0, 0, 0.3), 0.1, (0, 0, 0, 5.3)),
    ],
)
def test_step_examples(state, control, noise, dt, expected):
    out = step(VehicleState(*state), ControlInput(*control), DrivingNoise(*noise), dt)
    assert tuple(out) == pytest.approx(expected, abs=1e-12)


def test_step_rejects_non_positive_dt():
    with pytest.raises(ValueError):
        step(VehicleState(0, 0, 0, 1), ControlInput(1, 0), DrivingNoise(), 0.0)


def test_noise_enters_as_documented():
    # v_s = u_s + n_s and v_t = u_t + n_t; heading gains n_theta * dt
    out = step(VehicleState(0, 0, 0, 5), ControlInput(1, 0), DrivingNoise(1, 0, 0.5, 0), 0.1)
    assert out.x == pytest.approx(0.2)
    assert out.heading == pytest.approx(0.05)


def test_altitude_is_clamped_at_zero():
    out = step(VehicleState(0, 0, 0, 0.1), ControlInput(0, 0), DrivingNoise(0, 0, 0, -1.0), 0.1)
    assert out.altitude == 0.0


def test_heading_wraps_past_pi():
    out = step(VehicleState(0, 0, 3.1, 1), ControlInput(0, 1.0), DrivingNoise(), 0.1)
    assert out.heading == pytest.approx(3.2 - 2 * math.pi)


@pytest.mark.parametrize("a, w", [(math.pi, math.pi), (-math.pi, math.pi), (3 * math.pi, math.pi),
                                  (0.5, 0.5), (-7.0, -7.0 + 2 * math.pi)])
def test_wrap_angle(a, w):
    assert wrap_angle(a) == pytest.approx(w)


@given(st.floats(-1e4, 1e4))
def test_wrap_angle_range(a):
    w = wrap_angle(a)
    assert -math.pi < w <= math.pi
    assert math.cos(w) == pytest.approx(math.cos(a), abs=1e-9)


@given(finite, finite, angles, st.floats(0, 20), st.floats(-3, 3), st.floats(-2, 2), st.floats(0.01, 1))
def test_heading_output_wrapped_and_altitude_non_negative(x, y, th, g, us, ut, dt):
    out = step(VehicleState(x, y, th, g), ControlInput(us, ut), DrivingNoise(0.1, 0.2, 0.3, -0.4), dt)
    assert -math.pi < out.heading <= math.pi
    assert out.altitude >= 0


@given(finite, finite, angles, st.floats(0, 20))
def test_zero_input_is_identity(x, y, th, g):
    out = step(VehicleState(x, y, th, g), ControlInput(0, 0), DrivingNoise(), 0.1)
    assert tuple(out[:3]) == pytest.approx((x, y, th), abs=1e-12)


@given(angles, st.floats(0.1, 5), st.floats(0.01, 3),
       st.booleans(), st.floats(0.01, 2))
def test_arc_chord_length(th, vs, vt, neg, dt):
    vt = -vt if neg else vt
    out = step(VehicleState(0, 0, th, 1), ControlInput(vs, vt), DrivingNoise(), dt)
    chord = math.hypot(out.x, out.y)
    assert chord == pytest.approx(2 * abs(vs / vt) * abs(math.sin(vt * dt / 2)), abs=1e-9)


def test_continuity_at_the_straight_line_limit():
    rng = np.random.default_rng(8)
    for _ in range(100):
        s = VehicleState(*rng.uniform(-50, 50, 2), rng.uniform(-math.pi, math.pi), rng.uniform(0, 10))
        vs = rng.uniform(-3, 3)
        dt = rng.uniform(0.01, 1)
        curved = step(s, ControlInput(vs, 1e-9), DrivingNoise(), dt)
        straight = (s.x + vs * dt * math.cos(s.heading), s.y + vs * dt * math.sin(s.heading), s.heading, s.altitude)
        assert np.max(np.abs(np.subtract(curved, straight))) < 1e-6


def test_propagate_matches_step_row_by_row():
    rng = np.random.default_rng(1)
    states = np.column_stack([rng.normal(0, 10, (50, 2)), rng.uniform(-3, 3, 50), rng.uniform(0, 9, 50)])
    noise = rng.normal(0, 0.5, (50, 4))
    out = propagate(states, 1.5, 0.3, noise, 0.1)
    for s, n, o in zip(states, noise, out):
        ref = step(VehicleState(*s), ControlInput(1.5, 0.3), DrivingNoise(*n), 0.1)
        assert tuple(o) == tuple(ref)


def test_zero_variance_noise_is_zero():
    rng = np.random.default_rng(0)
    params = DrivingNoiseParams(0, 0, 0, 0)
    assert all(sample_driving_noise(params, rng) == DrivingNoise() for _ in range(20))


def test_driving_noise_moments():
    params = DrivingNoiseParams(1.5, 0.5, 0.2, 0.1)
    draws = sample_driving_noise(params, np.random.default_rng(3), size=1_000_000)
    sd = np.sqrt(params.as_array())
    assert np.all(np.abs(draws.mean(axis=0)) < 4 * sd / 1000)
    assert draws[:, 0].var() == pytest.approx(1.5, rel=0.02)
    assert draws.var(axis=0) == pytest.approx(params.as_array(), rel=0.02)
    assert abs(np.corrcoef(draws.T)[0, 1]) < 0.005
