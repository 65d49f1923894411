"""Single-run simulation, Monte Carlo RMSE evaluation and CSV output."""

from __future__ import annotations

import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .filter import GaussianBelief, filter_step
from .geometry import LandmarkMap
from .motion import ControlInput, VehicleState, propagate
from .scenario import Scenario
from .sonar import (
    JointMeasurement,
    extract_measurements,
    measure_landmarks,
    perturb_ranges,
    rasterize_ping,
)


@dataclass
class TrialLog:
    dt: float
    truth: np.ndarray  # (steps, 4)
    estimate: np.ndarray  # (steps, 4)
    variance: np.ndarray  # (steps, 4) covariance diagonal
    detections: np.ndarray  # (steps,) landmarks detected at each step
    degenerate: np.ndarray  # (steps,) bool

    def __len__(self):
        return self.truth.shape[0]

    def position_error(self) -> np.ndarray:
        """Squared 3-D location error (x, y, altitude) per step."""
        d = self.estimate[:, [0, 1, 3]] - self.truth[:, [0, 1, 3]]
        return (d * d).sum(axis=1)


@dataclass
class RmseCurve:
    dt: float
    rmse: np.ndarray
    runs: int

    def __len__(self):
        return self.rmse.size

    def time_average(self) -> float:
        return float(self.rmse.mean())


def _reflect(value: float, lo: float, hi: float) -> float:
    if hi <= lo:
        return lo
    span = hi - lo
    u = math.fmod(value - lo, 2 * span)
    if u < 0:
        u += 2 * span
    return lo + (u if u <= span else 2 * span - u)


def generate_landmark_measurements(state: VehicleState, scenario: Scenario, landmarks: LandmarkMap,
                                   rng: np.random.Generator) -> dict:
    """Noisy detections keyed by landmark index, via the model or the pixel pipeline."""
    sensor = scenario.sensor
    if len(landmarks) == 0:
        return {}
    if not scenario.pixel_pipeline:
        return measure_landmarks(state, landmarks, sensor, rng)
    ping = rasterize_ping(state, landmarks, sensor)
    clean = extract_measurements(ping, len(landmarks), sensor)
    std = math.sqrt(sensor.var_r)
    return {d: perturb_ranges(z, state.altitude, sensor, rng.standard_normal(2) * std)
            for d, z in enumerate(clean) if z is not None}


def simulate_truth(scenario: Scenario, seed: int) -> np.ndarray:
    """Ground-truth states for steps ``1..steps`` (same stream as :func:`run_trial`)."""
    motion_rng = np.random.default_rng(np.random.SeedSequence(seed).spawn(4)[0])
    return _truth_track(scenario, motion_rng)


def _truth_track(scenario: Scenario, motion_rng: np.random.Generator) -> np.ndarray:
    controls = scenario.controls()
    std = np.sqrt(scenario.noise.as_array())
    noise = motion_rng.standard_normal((scenario.steps, 4)) * std
    lo, hi = scenario.altitude_band
    out = np.empty((scenario.steps, 4))
    state = np.array(scenario.initial_state, dtype=float)
    for k in range(scenario.steps):
        state = propagate(state, controls[k, 0], controls[k, 1], noise[k], scenario.dt)
        state[3] = _reflect(state[3], lo, hi)
        out[k] = state
    return out


def run_trial(scenario: Scenario, seed: int, use_landmarks: bool = True) -> TrialLog:
    """Simulate one run and filter it.

    Independent random streams drive the vehicle, the sonar noise, the
    altimeter/compass noise and the filter, so the landmark and reference
    runs of a seed share the same true track and navigation measurements.
    """
    motion_ss, sonar_ss, nav_ss, filter_ss = np.random.SeedSequence(seed).spawn(4)
    sonar_rng = np.random.default_rng(sonar_ss)
    filter_rng = np.random.default_rng(filter_ss)
    truth = _truth_track(scenario, np.random.default_rng(motion_ss))
    steps = scenario.steps
    nav_noise = np.random.default_rng(nav_ss).standard_normal((steps, 2))
    nav_noise *= np.sqrt([scenario.sensor.var_a, scenario.sensor.var_c])

    landmarks = scenario.landmark_map if use_landmarks else LandmarkMap([])
    controls = scenario.controls()
    sensor = scenario.sensor

    estimate = np.empty((steps, 4))
    variance = np.empty((steps, 4))
    detections = np.zeros(steps, dtype=np.int64)
    degenerate = np.zeros(steps, dtype=bool)

    belief = GaussianBelief(np.array(scenario.initial_state, dtype=float), scenario.initial_cov.copy())
    for k in range(steps):
        state = VehicleState(*truth[k])
        z = None
        if k % scenario.ping_stride == 0:
            meas = generate_landmark_measurements(state, scenario, landmarks, sonar_rng)
            detections[k] = len(meas)
            z_a = state.altitude + nav_noise[k, 0]
            z_c = math.remainder(state.heading + nav_noise[k, 1], 2 * math.pi)
            if z_c == -math.pi:
                z_c = math.pi
            z = JointMeasurement(meas, len(landmarks), z_a, z_c)
        u = ControlInput(controls[k, 0], controls[k, 1])
        belief, degenerate[k] = filter_step(belief, u, z, landmarks, sensor, scenario.noise,
                                            scenario.dt, scenario.particle_count, filter_rng)
        estimate[k] = belief.mean
        variance[k] = np.diag(belief.cov)
    return TrialLog(scenario.dt, truth, estimate, variance, detections, degenerate)


def _trial_errors(args):
    scenario, seed, use_landmarks = args
    log = run_trial(scenario, seed, use_landmarks)
    return log.position_error(), detection_rate(log), int(log.degenerate.sum())


@dataclass
class MonteCarloResult:
    curve: RmseCurve
    detection_rates: np.ndarray
    degenerate_counts: np.ndarray


def run_monte_carlo_detailed(scenario: Scenario, runs: int, use_landmarks: bool = True,
                             seed: int | None = None, workers: int = 1) -> MonteCarloResult:
    if runs < 1:
        raise ValueError("need at least one run")
    base = scenario.seed if seed is None else seed
    jobs = [(scenario, base + r, use_landmarks) for r in range(runs)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_trial_errors, jobs))
    else:
        results = [_trial_errors(j) for j in jobs]
    # fixed-order reduction keeps the output independent of the worker count
    sq = np.zeros(scenario.steps)
    for err, _, _ in results:
        sq += err
    curve = RmseCurve(scenario.dt, np.sqrt(sq / runs), runs)
    return MonteCarloResult(curve, np.array([r[1] for r in results]), np.array([r[2] for r in results]))


def run_monte_carlo(scenario: Scenario, runs: int, use_landmarks: bool = True,
                    seed: int | None = None, workers: int = 1) -> RmseCurve:
    return run_monte_carlo_detailed(scenario, runs, use_landmarks, seed, workers).curve


def rmse_curve(logs) -> RmseCurve:
    """RMSE over a list of trial logs of equal length."""
    sq = np.zeros(len(logs[0]))
    for log in logs:
        sq += log.position_error()
    return RmseCurve(logs[0].dt, np.sqrt(sq / len(logs)), len(logs))


def detection_rate(log: TrialLog) -> float:
    if len(log) == 0:
        raise ValueError("empty trial log")
    return float(np.count_nonzero(log.detections >= 1)) / len(log)


def _fmt(v) -> str:
    return format(float(v), ".9g")


RMSE_COLUMNS = ["step", "time_s", "rmse_m"]
TRIAL_COLUMNS = ["step", "time_s", "true_x", "true_y", "true_theta", "true_gamma",
                 "est_x", "est_y", "est_theta", "est_gamma",
                 "var_x", "var_y", "var_theta", "var_gamma", "detections", "degenerate"]


def write_csv(result, path) -> None:
    """Write an :class:`RmseCurve` or :class:`TrialLog`, one row per step.

    Step ``k`` (1-based) is at ``k * dt`` seconds.
    """
    path = Path(path)
    try:
        with path.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            if isinstance(result, RmseCurve):
                w.writerow(RMSE_COLUMNS)
                for k, r in enumerate(result.rmse, start=1):
                    w.writerow([k, _fmt(k * result.dt), _fmt(r)])
            elif isinstance(result, TrialLog):
                w.writerow(TRIAL_COLUMNS)
                for k in range(len(result)):
                    row = [k + 1, _fmt((k + 1) * result.dt)]
                    row += [_fmt(v) for v in result.truth[k]]
                    row += [_fmt(v) for v in result.estimate[k]]
                    row += [_fmt(v) for v in result.variance[k]]
                    row += [int(result.detections[k]), int(bool(result.degenerate[k]))]
                    w.writerow(row)
            else:
                raise TypeError(f"cannot write {type(result).__name__} as CSV")
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror}") from exc
