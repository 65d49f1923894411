"""Command-line entry point.

Exit codes: 0 on success, 2 for a bad config or bad arguments, 1 when the
run itself fails.
"""

from __future__ import annotations

import argparse
import dataclasses
import logging
import sys
from pathlib import Path

from .scenario import ConfigError, load_scenario_file

log = logging.getLogger("sssnav")

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_CONFIG = 2


def _figure_path(out: Path, suffix: str) -> Path:
    return out.with_name(f"{out.stem}_{suffix}.png")


def _load(args):
    scenario = load_scenario_file(args.config)
    if getattr(args, "steps", None) is not None:
        if args.steps < 1:
            raise ConfigError("--steps", "must be positive")
        scenario = dataclasses.replace(scenario, steps=args.steps)
        scenario.controls()  # schedule must still cover the run
    return scenario


def cmd_simulate(args) -> None:
    from .harness import run_trial, write_csv

    scenario = _load(args)
    if args.pixels:
        scenario = dataclasses.replace(scenario, pixel_pipeline=True)
    use_landmarks = not args.no_landmarks
    trial = run_trial(scenario, args.seed, use_landmarks)
    out = Path(args.out)
    write_csv(trial, out)
    log.info("wrote %d steps to %s", len(trial), out)
    if args.plot:
        from .plotting import plot_error, plot_track

        plot_track(trial, _figure_path(out, "track"), scenario.landmark_map if use_landmarks else None)
        plot_error(trial, _figure_path(out, "error"))


def cmd_montecarlo(args) -> None:
    from .harness import run_monte_carlo_detailed, write_csv

    scenario = _load(args)
    if args.runs < 1:
        raise ConfigError("--runs", "must be positive")
    res = run_monte_carlo_detailed(scenario, args.runs, not args.no_landmarks, args.seed, args.workers)
    out = Path(args.out)
    write_csv(res.curve, out)
    log.info("time-averaged RMSE %.3f m over %d runs, detection rate %.4f",
             res.curve.time_average(), args.runs, res.detection_rates.mean())
    if args.plot:
        from .plotting import plot_rmse

        label = "reference" if args.no_landmarks else f"{scenario.spacing:g} m spacing"
        plot_rmse({label: res.curve}, _figure_path(out, "rmse"))


def cmd_pingdump(args) -> None:
    from .harness import simulate_truth
    from .motion import VehicleState
    from .sonar import rasterize_ping, write_pgm

    scenario = _load(args)
    truth = simulate_truth(scenario, args.seed)
    pings = [rasterize_ping(VehicleState(*s), scenario.landmark_map, scenario.sensor) for s in truth]
    out = Path(args.out)
    write_pgm(pings, out)
    log.info("wrote %d ping lines to %s", len(pings), out)
    if args.plot:
        from .plotting import plot_pings

        plot_pings(pings, out.with_suffix(".png"))


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="sssnav", description="Side-scan sonar landmark navigation simulator.")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, out_help):
        sp.add_argument("--config", required=True, help="flat TOML scenario file")
        sp.add_argument("--seed", type=int, required=True)
        sp.add_argument("--out", required=True, help=out_help)
        sp.add_argument("--steps", type=int, default=None, help="override the configured step count")
        sp.add_argument("--plot", action="store_true", help="also write PNG figures next to the output")

    s = sub.add_parser("simulate", help="one filtered run, per-step CSV")
    common(s, "CSV path")
    s.add_argument("--no-landmarks", action="store_true", help="reference run without landmark updates")
    s.add_argument("--pixels", action="store_true", help="measure through the rasterised ping line")
    s.set_defaults(func=cmd_simulate)

    m = sub.add_parser("montecarlo", help="RMSE curve over R runs")
    common(m, "CSV path")
    m.add_argument("--runs", type=int, required=True)
    m.add_argument("--no-landmarks", action="store_true")
    m.add_argument("--workers", type=int, default=1, help="worker processes (output does not depend on it)")
    m.set_defaults(func=cmd_montecarlo)

    d = sub.add_parser("pingdump", help="binary ping waterfall of the true track as PGM")
    common(d, "PGM path")
    d.set_defaults(func=cmd_pingdump)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001 - any run failure maps to exit 1
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
