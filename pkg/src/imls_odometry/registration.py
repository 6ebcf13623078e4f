"""Scan-to-model matching and the per-sweep odometry step."""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .deskew import deskew_points, predict_from_history
from .features import compute_features
from .geometry import DegenerateSystem, RigidTransform, compose, solve_point_to_plane
from .imls import ModelMap
from .object_removal import small_object_mask
from .sampling import (
    InsufficientSamples,
    build_score_lists,
    draw_all_samples,
    draw_random_samples,
    draw_samples,
)
from .scan_io import RunConfig, Sweep

STAGES = ("deskew", "removal", "features", "sampling", "match", "insert")


@dataclass
class MatchResult:
    pose: RigidTransform
    iterations_run: int
    final_constraints: int
    mean_abs_residual: float
    fallback: bool
    residual_history: list = field(default_factory=list)


def match_scan(sample_points, model: ModelMap, prediction: RigidTransform, iterations: int = 20,
               min_constraints: int = 6) -> MatchResult:
    """Register vehicle-frame sample points against the model's IMLS surface.

    Every iteration projects the current samples onto the surface, solves the
    small-angle point-to-plane problem and left-composes the motion onto the
    pose.  Too few constraints or a degenerate solve returns the prediction
    with ``fallback`` set.
    """
    pts = np.asarray(sample_points, dtype=float).reshape(-1, 3)
    pose = prediction
    history = []
    for it in range(iterations):
        x = pose.apply(pts)
        y, normals, valid, batch = model.project_many(x)
        count = int(valid.sum())
        if count < min_constraints:
            return MatchResult(prediction, it, count, float("nan"), True, history)
        history.append(float(np.abs(batch.values[valid]).mean()))
        try:
            motion = solve_point_to_plane(x[valid], y[valid], normals[valid])
        except DegenerateSystem:
            return MatchResult(prediction, it, count, history[-1], True, history)
        pose = compose(motion.to_transform(), pose)
    final = model.evaluate_many(pose.apply(pts))
    valid = final.valid
    residual = float(np.abs(final.values[valid]).mean()) if valid.any() else float("nan")
    return MatchResult(pose, iterations, int(valid.sum()), residual, False, history)


@dataclass
class SweepResult:
    index: int
    match: MatchResult
    timings: dict
    num_points: int
    num_kept: int
    num_samples: int

    @property
    def pose(self) -> RigidTransform:
        return self.match.pose


class Odometer:
    """Holds pose history and the model map; ``process`` localizes one sweep."""

    def __init__(self, config: RunConfig | None = None):
        self.config = config or RunConfig()
        self.poses: list[RigidTransform] = []
        self.model = ModelMap(self.config.n, self.config.h, self.config.r)
        self.results: list[SweepResult] = []
        self._rng = np.random.default_rng(self.config.seed)

    def _wants_deskew(self, sweep: Sweep) -> bool:
        mode = self.config.deskew
        return mode == "on" or (mode == "auto" and not sweep.pre_deskewed)

    def _local_cloud(self, pts, sweep, prev, end, deskew):
        """Cloud expressed in the vehicle frame at the end of the sweep."""
        if not deskew:
            return pts
        return deskew_points(pts, sweep.time_fraction, compose(end.inverse(), prev), RigidTransform.identity())

    def process(self, sweep: Sweep, remap: np.ndarray | None = None) -> SweepResult:
        cfg = self.config
        timings = dict.fromkeys(STAGES, 0.0)
        clock = time.perf_counter
        m = cfg.remap if remap is None else remap
        pts = sweep.points @ m.T
        prev = self.poses[-1] if self.poses else RigidTransform.identity()
        pred = predict_from_history(self.poses)
        deskew = self._wants_deskew(sweep)

        t0 = clock()
        local = self._local_cloud(pts, sweep, prev, pred, deskew)
        timings["deskew"] = clock() - t0

        t0 = clock()
        keep = small_object_mask(local, cfg) if cfg.object_removal else np.ones(len(local), dtype=bool)
        timings["removal"] = clock() - t0

        t0 = clock()
        feats = compute_features(local[keep], cfg.k_neighbors)
        timings["features"] = clock() - t0

        n_samples = 0
        if len(self.model) == 0:
            match = MatchResult(pred, 0, 0, 0.0, False)
        else:
            t0 = clock()
            world = pred.apply(feats.points)
            try:
                samples = self._draw(feats, world)
                n_samples = len(samples)
            except InsufficientSamples:
                samples = None
            timings["sampling"] = clock() - t0
            t0 = clock()
            if samples is None:
                match = MatchResult(pred, 0, 0, float("nan"), True)
            else:
                match = match_scan(feats.points[samples.indices], self.model, pred, cfg.iterations)
            timings["match"] = clock() - t0

        t0 = clock()
        pose = match.pose
        final_local = self._local_cloud(pts, sweep, prev, pose, deskew)[keep]
        usable = feats.usable
        self.model.insert(pose.apply(final_local[usable]), pose.rotate(feats.normals[usable]))
        timings["insert"] = clock() - t0

        self.poses.append(pose)
        result = SweepResult(sweep.index, match, {k: v * 1e3 for k, v in timings.items()},
                             len(pts), int(keep.sum()), n_samples)
        self.results.append(result)
        return result

    def _draw(self, feats, world):
        cfg = self.config
        if cfg.sampling == "ours":
            lists = build_score_lists(feats)
            return draw_samples(lists, self.model, cfg.s, cfg.r, world, min_samples=cfg.min_samples)
        if cfg.sampling == "random":
            return draw_random_samples(len(feats), self.model, 9 * cfg.s, cfg.r, world, self._rng,
                                       usable=feats.usable, min_samples=cfg.min_samples)
        return draw_all_samples(self.model, cfg.r, world, usable=feats.usable, min_samples=cfg.min_samples)


def localize_sweep(sweep: Sweep, state: Odometer, config: RunConfig | None = None):
    """Functional wrapper over :meth:`Odometer.process`; returns (MatchResult, state)."""
    if config is not None and config is not state.config:
        raise ValueError("state was created with a different config")
    result = state.process(sweep)
    return result.match, state


def run_sweeps(sweeps, config: RunConfig | None = None, remap=None) -> Odometer:
    odo = Odometer(config)
    for sweep in sweeps:
        odo.process(sweep, remap)
    return odo
