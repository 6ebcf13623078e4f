"""Report figures: trajectory overlay, per-length drift, per-sweep timings.

Figures are built on ``matplotlib.figure.Figure`` directly, so no GUI
backend or global pyplot state is touched.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
from matplotlib.figure import Figure

from .evaluation import DriftReport


def _figure(width=5.0, height=4.0) -> Figure:
    fig = Figure(figsize=(width, height), layout="constrained")
    return fig


def _save(fig: Figure, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=150)
    return path


def _xy(poses) -> np.ndarray:
    return np.array([p.translation[:2] for p in poses])


def plot_trajectories(estimate, truth=None, path="trajectory.png", title="Trajectory (top view)") -> Path:
    fig = _figure()
    ax = fig.add_subplot()
    if truth is not None:
        t = _xy(truth)
        ax.plot(t[:, 0], t[:, 1], "k-", lw=1.2, label="ground truth")
    e = _xy(estimate)
    ax.plot(e[:, 0], e[:, 1], "-", color="tab:red", lw=1.0, label="estimate")
    ax.plot(e[0, 0], e[0, 1], "o", color="tab:green", ms=4, label="start")
    ax.set_aspect("equal", adjustable="datalim")
    ax.set_xlabel("x [m]")
    ax.set_ylabel("y [m]")
    ax.set_title(title)
    ax.legend(loc="best", fontsize=7)
    return _save(fig, path)


def plot_segment_drift(report: DriftReport, path="drift.png") -> Path:
    lengths = [s.length for s in report.segments]
    fig = _figure(7.0, 3.0)
    ax1, ax2 = fig.subplots(1, 2)
    ax1.plot(lengths, [s.translation_drift for s in report.segments], "o-", color="tab:blue")
    ax1.set_xlabel("segment length [m]")
    ax1.set_ylabel("translation error [%]")
    ax2.plot(lengths, [s.rotation_drift for s in report.segments], "o-", color="tab:orange")
    ax2.set_xlabel("segment length [m]")
    ax2.set_ylabel("rotation error [deg/m]")
    fig.suptitle(f"mean {report.translation_drift:.2f} %, {report.rotation_drift:.5f} deg/m")
    return _save(fig, path)


def plot_timings(results, path="timings.png") -> Path:
    """Stacked per-stage time for every sweep of an odometry run."""
    from .registration import STAGES

    idx = np.array([r.index for r in results])
    fig = _figure(7.0, 3.0)
    ax = fig.add_subplot()
    bottom = np.zeros(len(results))
    for stage in STAGES:
        ms = np.array([r.timings[stage] for r in results])
        ax.bar(idx, ms, bottom=bottom, width=1.0, label=stage)
        bottom += ms
    ax.set_xlabel("sweep")
    ax.set_ylabel("time [ms]")
    ax.legend(ncol=3, fontsize=7)
    return _save(fig, path)


def plot_errors(estimate, truth, path="errors.png") -> Path:
    """Position error norm along the run."""
    err = np.linalg.norm(np.array([e.translation - t.translation for e, t in zip(estimate, truth)]), axis=1)
    fig = _figure(6.0, 2.5)
    ax = fig.add_subplot()
    ax.plot(np.arange(len(err)), err, "-", color="tab:red")
    ax.set_xlabel("pose index")
    ax.set_ylabel("position error [m]")
    return _save(fig, path)


def write_report_figures(estimate, truth, report: DriftReport | None, out_dir) -> list[Path]:
    out = Path(out_dir)
    paths = [plot_trajectories(estimate, truth, out / "trajectory.png"), plot_errors(estimate, truth, out / "errors.png")]
    if report is not None and report.segments:
        paths.append(plot_segment_drift(report, out / "drift.png"))
    return paths
