"""Nearest-neighbor queries over static point sets.

``SpatialIndex`` wraps :class:`scipy.spatial.cKDTree`; the ``brute_*``
functions are the exhaustive reference used to check it.
"""

from __future__ import annotations

import numpy as np
from scipy.spatial import cKDTree


class SpatialIndex:
    def __init__(self, points):
        self.points = np.ascontiguousarray(np.asarray(points, dtype=float).reshape(-1, 3))
        self._tree = cKDTree(self.points, balanced_tree=False, compact_nodes=False) if len(self.points) else None

    def __len__(self):
        return len(self.points)

    def nearest(self, queries):
        """Distance and index of the closest indexed point for each query."""
        q = np.asarray(queries, dtype=float).reshape(-1, 3)
        if self._tree is None:
            return np.full(len(q), np.inf), np.full(len(q), -1, dtype=np.intp)
        d, i = self._tree.query(q, k=1)
        return d, i.astype(np.intp)

    def knn(self, queries, k: int):
        """(N, k) distances and indices, sorted by increasing distance."""
        q = np.asarray(queries, dtype=float).reshape(-1, 3)
        if k > len(self.points):
            raise ValueError(f"k={k} exceeds indexed point count {len(self.points)}")
        d, i = self._tree.query(q, k=k)
        return d.reshape(len(q), k), i.reshape(len(q), k).astype(np.intp)

    def radius(self, queries, r: float):
        """Flattened radius search: (query_ids, point_ids) with ``|q - p| <= r``."""
        q = np.asarray(queries, dtype=float).reshape(-1, 3)
        if self._tree is None or len(q) == 0:
            return np.empty(0, dtype=np.intp), np.empty(0, dtype=np.intp)
        hits = self._tree.query_ball_point(q, r, return_sorted=False)
        counts = np.fromiter((len(h) for h in hits), dtype=np.intp, count=len(hits))
        qid = np.repeat(np.arange(len(q), dtype=np.intp), counts)
        if counts.sum() == 0:
            return qid, np.empty(0, dtype=np.intp)
        pid = np.concatenate([np.asarray(h, dtype=np.intp) for h in hits if len(h)])
        return qid, pid

    def pairs_within(self, r: float) -> np.ndarray:
        """All index pairs (i < j) with ``|p_i - p_j| <= r``, shape (M, 2)."""
        if self._tree is None:
            return np.empty((0, 2), dtype=np.intp)
        return self._tree.query_pairs(r, output_type="ndarray")


def brute_knn(points, queries, k: int):
    p = np.asarray(points, dtype=float)
    q = np.asarray(queries, dtype=float).reshape(-1, 3)
    d2 = ((q[:, None, :] - p[None, :, :]) ** 2).sum(-1)
    idx = np.argsort(d2, axis=1, kind="stable")[:, :k]
    return np.sqrt(np.take_along_axis(d2, idx, axis=1)), idx


def brute_radius(points, queries, r: float) -> list[set[int]]:
    p = np.asarray(points, dtype=float)
    q = np.asarray(queries, dtype=float).reshape(-1, 3)
    d = np.sqrt(((q[:, None, :] - p[None, :, :]) ** 2).sum(-1))
    return [set(np.flatnonzero(row <= r).tolist()) for row in d]
