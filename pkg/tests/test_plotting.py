import numpy as np

from imls_odometry.evaluation import evaluate_kitti
from imls_odometry.geometry import RigidTransform
from imls_odometry.plotting import plot_timings, plot_trajectories, write_report_figures
from imls_odometry.registration import run_sweeps
from imls_odometry.scan_io import RunConfig
from imls_odometry.scenes import static_scene
from imls_odometry.simulation import simulate_run

PNG = b"\x89PNG\r\n\x1a\n"


def arc(n=250, drift=0.0):
    return [RigidTransform.from_rotvec([0, 0, 0.01 * k], (np.cos(0.01 * k) * 50, np.sin(0.01 * k) * 50 + drift * k, 0))
            for k in range(n)]


def test_report_figures(tmp_path):
    truth, est = arc(), arc(drift=0.01)
    paths = write_report_figures(est, truth, evaluate_kitti(est, truth, lengths=(50.0, 100.0)), tmp_path / "out")
    assert [p.name for p in paths] == ["trajectory.png", "errors.png", "drift.png"]
    assert all(p.read_bytes()[:8] == PNG for p in paths)


def test_report_without_drift_table(tmp_path):
    paths = write_report_figures(arc(20), arc(20), None, tmp_path)
    assert [p.name for p in paths] == ["trajectory.png", "errors.png"]


def test_trajectory_without_truth_and_timings(tmp_path):
    assert plot_trajectories(arc(), None, tmp_path / "t.png").read_bytes()[:8] == PNG
    sims, _ = simulate_run(static_scene(sweeps=2))
    odo = run_sweeps([s.sweep for s in sims], RunConfig(axis_remap="identity"))
    assert plot_timings(odo.results, tmp_path / "timings.png").read_bytes()[:8] == PNG
