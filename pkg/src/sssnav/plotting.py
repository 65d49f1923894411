"""Figures for the CLI report path: RMSE curves, tracks and ping images.

Everything renders off-screen with the Agg backend and is written straight
to file; nothing here opens a window.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

STYLE = {
    "figure.figsize": (6.4, 4.0),
    "figure.dpi": 120,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "legend.frameon": False,
    "font.size": 9,
}


def _save(fig, path) -> Path:
    path = Path(path)
    fig.savefig(path, bbox_inches="tight")
    plt.close(fig)
    return path


def plot_rmse(curves: dict, path, title: str | None = None) -> Path:
    """RMSE against time for one or more labelled :class:`RmseCurve` objects."""
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        for label, curve in curves.items():
            t = np.arange(1, len(curve) + 1) * curve.dt / 60.0
            ax.plot(t, curve.rmse, lw=1.0, label=f"{label} (mean {curve.time_average():.2f} m)")
        ax.set_xlabel("time [min]")
        ax.set_ylabel("RMSE [m]")
        ax.set_ylim(bottom=0)
        if title:
            ax.set_title(title)
        ax.legend(loc="upper left")
        return _save(fig, path)


def plot_track(log, path, landmarks=None) -> Path:
    """True and estimated horizontal track, with the landmark grid if given.

    Only landmarks inside the track's bounding box (plus a margin) are drawn.
    """
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(6.4, 6.4))
        lo = log.truth[:, :2].min(axis=0) - 25.0
        hi = log.truth[:, :2].max(axis=0) + 25.0
        if landmarks is not None and len(landmarks):
            arr = np.asarray(landmarks.array)
            keep = np.all((arr[:, :2] >= lo) & (arr[:, :2] <= hi), axis=1)
            ax.scatter(arr[keep, 0], arr[keep, 1], s=6, marker="s", c="0.6", label="landmarks")
        ax.plot(log.truth[:, 0], log.truth[:, 1], lw=1.0, c="k", label="true")
        ax.plot(log.estimate[:, 0], log.estimate[:, 1], lw=0.8, c="C3", label="estimate")
        ax.set_aspect("equal")
        ax.set_xlim(lo[0], hi[0])
        ax.set_ylim(lo[1], hi[1])
        ax.set_xlabel("x [m]")
        ax.set_ylabel("y [m]")
        ax.legend(loc="best")
        return _save(fig, path)


def plot_error(log, path) -> Path:
    """Per-step location error of a single run with its 1-sigma envelope."""
    err = np.sqrt(log.position_error())
    sigma = np.sqrt(log.variance[:, [0, 1, 3]].sum(axis=1))
    t = np.arange(1, len(log) + 1) * log.dt / 60.0
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        ax.plot(t, err, lw=0.8, label="error")
        ax.plot(t, sigma, lw=0.8, ls="--", label="filter 1-sigma")
        hits = log.detections > 0
        if hits.any():
            ax.plot(t[hits], np.zeros(hits.sum()), "|", c="C2", ms=6, label="detection")
        ax.set_xlabel("time [min]")
        ax.set_ylabel("location error [m]")
        ax.set_ylim(bottom=0)
        ax.legend(loc="upper left")
        return _save(fig, path)


def plot_pings(pings, path) -> Path:
    """Waterfall image of binary ping lines (port on the left)."""
    img = np.array([p.image_row() for p in pings], dtype=float)
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        ax.imshow(img, cmap="gray_r", aspect="auto", interpolation="nearest")
        ax.axvline(img.shape[1] / 2 - 0.5, c="C0", lw=0.5)
        ax.set_xlabel("pixel (port | starboard)")
        ax.set_ylabel("ping")
        ax.grid(False)
        return _save(fig, path)
