"""Model point cloud of the last n localized scans and its IMLS distance function.

For a query x with neighbors p_i (normals n_i) inside the ball B(x, r)::

    I(x) = sum_i W_i(x) (x - p_i) . n_i / sum_j W_j(x),   W_i(x) = exp(-|x - p_i|^2 / h^2)

Projection onto the surface uses the normal of the closest map point:
``y = x - I(x) n_c``.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from .scan_io import write_ply
from .spatial import SpatialIndex


class NoSupport(LookupError):
    """No map point lies within r of the query."""


def imls_weight(distance, h: float):
    return np.exp(-np.square(distance) / (h * h))


@dataclass(frozen=True)
class MapScan:
    points: np.ndarray
    normals: np.ndarray


@dataclass(frozen=True)
class ImlsEval:
    value: float
    normal: np.ndarray
    support: int


@dataclass
class ImlsBatch:
    values: np.ndarray
    normals: np.ndarray
    support: np.ndarray
    nearest_distance: np.ndarray

    @property
    def valid(self) -> np.ndarray:
        return self.support > 0


class ModelMap:
    """FIFO of at most ``capacity`` world-frame scans with frozen normals."""

    def __init__(self, capacity: int = 100, h: float = 0.06, r: float = 0.20):
        if capacity < 1 or h <= 0 or r <= 0:
            raise ValueError("capacity >= 1, h > 0 and r > 0 required")
        self.capacity = capacity
        self.h = h
        self.r = r
        self.scans: deque[MapScan] = deque()
        self.points = np.empty((0, 3))
        self.normals = np.empty((0, 3))
        self.index = SpatialIndex(self.points)

    def __len__(self):
        return len(self.scans)

    @property
    def num_points(self) -> int:
        return len(self.points)

    def insert(self, points, normals) -> "ModelMap":
        pts = np.asarray(points, dtype=float).reshape(-1, 3)
        nrm = np.asarray(normals, dtype=float).reshape(-1, 3)
        if len(pts) != len(nrm):
            raise ValueError("points and normals differ in length")
        self.scans.append(MapScan(pts, nrm))
        while len(self.scans) > self.capacity:
            self.scans.popleft()
        self.points = np.concatenate([s.points for s in self.scans])
        self.normals = np.concatenate([s.normals for s in self.scans])
        self.index = SpatialIndex(self.points)
        return self

    def nearest(self, queries):
        return self.index.nearest(queries)

    def evaluate_many(self, queries) -> ImlsBatch:
        q = np.asarray(queries, dtype=float).reshape(-1, 3)
        m = len(q)
        if self.num_points == 0:
            raise ValueError("model map is empty")
        near_d, near_i = self.index.nearest(q)
        qid, pid = self.index.radius(q, self.r)
        diff = q[qid] - self.points[pid]
        d2 = np.einsum("ij,ij->i", diff, diff)
        # shift by the nearest squared distance so weights cannot all underflow
        w = np.exp(-(d2 - near_d[qid] ** 2) / (self.h * self.h))
        signed = np.einsum("ij,ij->i", diff, self.normals[pid])
        num = np.bincount(qid, w * signed, minlength=m)
        den = np.bincount(qid, w, minlength=m)
        support = np.bincount(qid, minlength=m)
        values = np.zeros(m)
        ok = support > 0
        values[ok] = num[ok] / den[ok]
        normals = self.normals[np.where(ok, near_i, 0)]
        return ImlsBatch(values, normals, support, near_d)

    def evaluate(self, x) -> ImlsEval:
        batch = self.evaluate_many(x)
        if not batch.valid[0]:
            raise NoSupport(f"no map point within r={self.r} m")
        return ImlsEval(float(batch.values[0]), batch.normals[0], int(batch.support[0]))

    def project_many(self, queries):
        """Projections, normals and validity mask for a batch of queries."""
        q = np.asarray(queries, dtype=float).reshape(-1, 3)
        batch = self.evaluate_many(q)
        y = q - batch.values[:, None] * batch.normals
        return y, batch.normals, batch.valid, batch

    def project(self, x):
        ev = self.evaluate(x)
        return np.asarray(x, dtype=float).reshape(3) - ev.value * ev.normal, ev.normal

    def write_ply(self, path) -> None:
        write_ply(self.points, path, normals=self.normals)


def insert_scan(model: ModelMap, points, normals) -> ModelMap:
    return model.insert(points, normals)


def evaluate_imls(model: ModelMap, x) -> ImlsEval:
    return model.evaluate(x)


def project_to_surface(model: ModelMap, x):
    return model.project(x)


def brute_force_imls(points, normals, x, h: float, r: float) -> float:
    """Direct summation over every map point within r; the reference for ``evaluate``."""
    p = np.asarray(points, dtype=float)
    n = np.asarray(normals, dtype=float)
    x = np.asarray(x, dtype=float).reshape(3)
    num = 0.0
    den = 0.0
    for pi, ni in zip(p, n):
        d = x - pi
        dist = float(np.sqrt(d @ d))
        if dist <= r:
            w = float(np.exp(-dist * dist / (h * h)))
            num += w * float(d @ ni)
            den += w
    if den == 0.0:
        raise NoSupport("no point within r")
    return num / den
