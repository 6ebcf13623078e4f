"""KITTI-style drift metrics and loop endpoint error."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .geometry import RigidTransform, rotation_angle

SEGMENT_LENGTHS = (100.0, 200.0, 300.0, 400.0, 500.0, 600.0, 700.0, 800.0)
_LENGTH_EPS = 1e-9


class LengthMismatch(ValueError):
    pass


class TooShort(ValueError):
    pass


@dataclass
class SegmentStats:
    length: float
    translation_drift: float  # percent
    rotation_drift: float  # deg / m
    count: int


@dataclass
class DriftReport:
    translation_drift: float
    rotation_drift: float
    endpoint_error: float
    endpoint_percent: float
    path_length: float
    segments: list[SegmentStats] = field(default_factory=list)

    def format(self) -> str:
        lines = [
            f"path_length_m {self.path_length:.3f}",
            f"translation_drift_percent {self.translation_drift:.6f}",
            f"rotation_drift_deg_per_m {self.rotation_drift:.8f}",
            f"endpoint_error_m {self.endpoint_error:.6f}",
            f"endpoint_error_percent {self.endpoint_percent:.6f}",
            "segment_m translation_percent rotation_deg_per_m count",
        ]
        for seg in self.segments:
            lines.append(f"{seg.length:.0f} {seg.translation_drift:.6f} {seg.rotation_drift:.8f} {seg.count}")
        return "\n".join(lines) + "\n"


def path_distances(poses) -> np.ndarray:
    t = np.array([p.translation for p in poses])
    steps = np.linalg.norm(np.diff(t, axis=0), axis=1)
    return np.concatenate([[0.0], np.cumsum(steps)])


def _check(estimate, truth):
    if len(estimate) != len(truth):
        raise LengthMismatch(f"estimate has {len(estimate)} poses, truth has {len(truth)}")
    if len(truth) < 2:
        raise TooShort("need at least two poses")


def endpoint_error(estimate, truth) -> tuple[float, float]:
    """Final-position distance in meters and as percent of the truth path length."""
    _check(estimate, truth)
    err = float(np.linalg.norm(estimate[-1].translation - truth[-1].translation))
    length = float(path_distances(truth)[-1])
    return err, (100.0 * err / length if length > 0 else float("inf"))


def segment_errors(estimate, truth, lengths=SEGMENT_LENGTHS, step: int = 1):
    """(length, translation error / L, rotation error rad / L) for every admissible segment."""
    dist = path_distances(truth)
    out = []
    for first in range(0, len(truth), step):
        for length in lengths:
            reach = np.flatnonzero(dist[first:] - dist[first] >= length - _LENGTH_EPS)
            if reach.size == 0:
                continue
            last = first + int(reach[0])
            d_gt = truth[first].inverse() @ truth[last]
            d_est = estimate[first].inverse() @ estimate[last]
            err = d_est.inverse() @ d_gt
            out.append((length, np.linalg.norm(err.translation) / length, rotation_angle(err.rotation) / length))
    return out


def evaluate_kitti(estimate: list[RigidTransform], truth: list[RigidTransform], lengths=SEGMENT_LENGTHS,
                   step: int = 1) -> DriftReport:
    _check(estimate, truth)
    errs = segment_errors(estimate, truth, lengths, step)
    if not errs:
        raise TooShort(f"trajectory shorter than {min(lengths):.0f} m")
    arr = np.array(errs)
    segments = []
    for length in lengths:
        sel = arr[:, 0] == length
        if sel.any():
            segments.append(SegmentStats(length, 100.0 * arr[sel, 1].mean(),
                                         float(np.degrees(arr[sel, 2].mean())), int(sel.sum())))
    end_m, end_pct = endpoint_error(estimate, truth)
    return DriftReport(
        translation_drift=100.0 * float(arr[:, 1].mean()),
        rotation_drift=float(np.degrees(arr[:, 2].mean())),
        endpoint_error=end_m,
        endpoint_percent=end_pct,
        path_length=float(path_distances(truth)[-1]),
        segments=segments,
    )


def normalize_to_start(poses) -> list[RigidTransform]:
    """Express a trajectory relative to its first pose."""
    inv0 = poses[0].inverse()
    return [inv0 @ p for p in poses]
