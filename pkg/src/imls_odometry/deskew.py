"""Constant-velocity pose prediction and per-point motion compensation."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import RigidTransform, compose, interpolate_many
from .scan_io import Sweep


@dataclass(frozen=True)
class PosePair:
    prev: RigidTransform
    prev2: RigidTransform


def predict_pose(history: PosePair) -> RigidTransform:
    """``prev * prev2^-1 * prev``: repeat the last relative motion."""
    return compose(compose(history.prev, history.prev2.inverse()), history.prev)


def predict_from_history(poses: list[RigidTransform]) -> RigidTransform:
    """Prediction with bootstrap: identity for the first sweep, last pose for the second."""
    if not poses:
        return RigidTransform.identity()
    if len(poses) == 1:
        return poses[0]
    return predict_pose(PosePair(poses[-1], poses[-2]))


def deskew_points(points, time_fraction, start: RigidTransform, end: RigidTransform) -> np.ndarray:
    """Map each sensor-frame point by the pose interpolated at its time fraction."""
    rots, trans = interpolate_many(start, end, time_fraction)
    return np.einsum("nij,nj->ni", rots, np.asarray(points, dtype=float)) + trans


def deskew_sweep(sweep: Sweep, start: RigidTransform, end: RigidTransform, *, force: bool = False) -> np.ndarray:
    """World-frame cloud of ``sweep``.

    Sweeps flagged ``pre_deskewed`` only get the single pose ``end`` unless
    ``force`` is set.
    """
    if sweep.pre_deskewed and not force:
        return end.apply(sweep.points)
    return deskew_points(sweep.points, sweep.time_fraction, start, end)
