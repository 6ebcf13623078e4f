"""Observability-ranked sample selection.

Nine scores per point, each weighted by a2d^2: the signed components of
``x x n`` along X_v, Y_v, Z_v (both signs, rotation observability) and
``|n . X_v|``, ``|n . Y_v|``, ``|n . Z_v|`` (translation observability).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .features import FeaturedCloud

LIST_NAMES = ("+rot_x", "-rot_x", "+rot_y", "-rot_y", "+rot_z", "-rot_z", "trans_x", "trans_y", "trans_z")


class InsufficientSamples(RuntimeError):
    pass


@dataclass
class ScoreLists:
    scores: np.ndarray  # (N, 9)
    orders: np.ndarray  # (9, N), each row sorted by descending score

    def __len__(self):
        return self.scores.shape[0]


@dataclass
class SampleSet:
    indices: np.ndarray  # scan point indices, duplicates allowed
    list_ids: np.ndarray

    def __len__(self):
        return len(self.indices)


def point_scores(points, normals, a2d) -> np.ndarray:
    x = np.asarray(points, dtype=float)
    n = np.asarray(normals, dtype=float)
    a2 = np.square(np.asarray(a2d, dtype=float))[:, None]
    lever = np.cross(x, n) * a2
    trans = np.abs(n) * a2
    return np.column_stack([lever[:, 0], -lever[:, 0], lever[:, 1], -lever[:, 1],
                            lever[:, 2], -lever[:, 2], trans])


def build_score_lists(scan: FeaturedCloud) -> ScoreLists:
    """Score lists for a vehicle-frame featured scan; ties go to the lower index."""
    scores = point_scores(scan.points, scan.normals, scan.a2d)
    scores[~scan.usable] = -np.inf
    idx = np.arange(len(scores))
    orders = np.stack([np.lexsort((idx, -scores[:, k])) for k in range(9)])
    return ScoreLists(scores, orders)


def gate(world_points, model, r: float) -> np.ndarray:
    """True where the closest model point lies within ``r``."""
    d, _ = model.nearest(world_points)
    return d <= r


def draw_samples(lists: ScoreLists, model, s: int, r: float, world_points, *, min_samples: int = 100) -> SampleSet:
    """Take the first ``s`` gated points from the head of every list."""
    if s < 1:
        raise ValueError("s must be >= 1")
    accepted = gate(world_points, model, r) & np.isfinite(lists.scores[:, 0])
    picks, ids = [], []
    for k, order in enumerate(lists.orders):
        chosen = order[accepted[order]][:s]
        picks.append(chosen)
        ids.append(np.full(len(chosen), k))
    return _finish(np.concatenate(picks), np.concatenate(ids), min_samples)


def draw_random_samples(num_points: int, model, count: int, r: float, world_points, rng, *,
                        usable=None, min_samples: int = 100) -> SampleSet:
    """Uniformly shuffled points through the same outlier gate, up to ``count``."""
    accepted = gate(world_points, model, r)
    if usable is not None:
        accepted &= usable
    order = rng.permutation(num_points)
    chosen = order[accepted[order]][:count]
    return _finish(chosen, np.full(len(chosen), -1), min_samples)


def draw_all_samples(model, r: float, world_points, *, usable=None, min_samples: int = 100) -> SampleSet:
    accepted = gate(world_points, model, r)
    if usable is not None:
        accepted &= usable
    chosen = np.flatnonzero(accepted)
    return _finish(chosen, np.full(len(chosen), -1), min_samples)


def _finish(indices, list_ids, min_samples) -> SampleSet:
    if len(indices) < min_samples:
        raise InsufficientSamples(f"only {len(indices)} samples passed the outlier gate (need {min_samples})")
    return SampleSet(indices.astype(np.intp), list_ids.astype(np.intp))
