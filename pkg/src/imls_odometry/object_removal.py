"""Small-object removal: ground extraction, single-linkage clustering, bbox filter.

All clouds are in the vehicle frame (X right, Y forward, Z up), sensor at the origin.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from itertools import product

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .spatial import SpatialIndex


class NoGroundFound(ValueError):
    pass


@dataclass
class GroundParams:
    voxel: float = 0.5
    seed_radius: float = 10.0
    max_slope_deg: float = 30.0
    max_step: float = 0.3
    band: float = 0.2
    min_voxel_points: int = 3

    @classmethod
    def from_config(cls, cfg) -> "GroundParams":
        return cls(cfg.ground_voxel, cfg.ground_seed_radius, cfg.ground_max_slope_deg, cfg.ground_max_step)


@dataclass
class GroundLabeling:
    is_ground: np.ndarray
    seed_voxels: list = field(default_factory=list)
    grown_voxels: list = field(default_factory=list)
    plane: tuple | None = None


@dataclass
class Cluster:
    indices: np.ndarray
    bbox_min: np.ndarray
    bbox_max: np.ndarray

    @property
    def extent(self) -> np.ndarray:
        return self.bbox_max - self.bbox_min


_NEIGHBOR_OFFSETS = [o for o in product((-1, 0, 1), repeat=3) if o != (0, 0, 0)]


def _voxel_stats(pts, voxel):
    keys = np.floor(pts / voxel).astype(np.int64)
    uniq, inverse, counts = np.unique(keys, axis=0, return_inverse=True, return_counts=True)
    inverse = inverse.reshape(-1)
    nv = len(uniq)
    sums = np.zeros((nv, 3))
    np.add.at(sums, inverse, pts)
    means = sums / counts[:, None]
    d = pts - means[inverse]
    cov = np.zeros((nv, 3, 3))
    np.add.at(cov, inverse, d[:, :, None] * d[:, None, :])
    cov /= counts[:, None, None]
    _, vecs = np.linalg.eigh(cov)
    return uniq, inverse, counts, means, vecs[:, :, 0]


def extract_ground(cloud, params: GroundParams | None = None) -> GroundLabeling:
    """Label ground points by voxel growing from flat, low voxels near the sensor.

    Grown voxels support a least-squares ground plane; every point within
    ``params.band`` of that plane is labeled ground.
    """
    p = params or GroundParams()
    pts = np.asarray(cloud, dtype=float).reshape(-1, 3)
    if len(pts) == 0:
        raise ValueError("empty cloud")
    keys, inverse, counts, means, normals = _voxel_stats(pts, p.voxel)
    cos_slope = np.cos(np.radians(p.max_slope_deg))
    flat = (counts >= p.min_voxel_points) & (np.abs(normals[:, 2]) >= cos_slope)

    lookup = {tuple(k): i for i, k in enumerate(keys.tolist())}
    lowest: dict[tuple, int] = {}
    for i, (ix, iy, iz) in enumerate(keys.tolist()):
        col = (ix, iy)
        if col not in lowest or iz < keys[lowest[col], 2]:
            lowest[col] = i
    lowest_ids = np.array(sorted(lowest.values()), dtype=np.intp)
    centers = (keys[lowest_ids, :2] + 0.5) * p.voxel
    near = np.hypot(centers[:, 0], centers[:, 1]) <= p.seed_radius
    candidates = np.array([i for i in lowest_ids[near] if flat[i]], dtype=np.intp)
    if candidates.size == 0:
        raise NoGroundFound("no flat low voxel near the sensor")
    # flat tops of low objects (car roofs) are also lowest-in-column; keep the bottom layer
    floor = np.percentile(means[candidates, 2], 5)
    seeds = [int(i) for i in candidates if means[i, 2] - floor < p.max_step]

    grown = np.zeros(len(keys), dtype=bool)
    grown[seeds] = True
    queue = deque(seeds)
    while queue:
        cur = queue.popleft()
        kx, ky, kz = keys[cur]
        for dx, dy, dz in _NEIGHBOR_OFFSETS:
            nb = lookup.get((kx + dx, ky + dy, kz + dz))
            if nb is None or grown[nb] or not flat[nb]:
                continue
            if abs(means[nb, 2] - means[cur, 2]) < p.max_step:
                grown[nb] = True
                queue.append(nb)

    support = pts[grown[inverse]]
    centroid = support.mean(axis=0)
    _, _, vt = np.linalg.svd(support - centroid, full_matrices=False)
    normal = vt[-1] if vt[-1, 2] >= 0 else -vt[-1]
    dist = (pts - centroid) @ normal
    is_ground = np.abs(dist) < p.band
    return GroundLabeling(
        is_ground=is_ground,
        seed_voxels=[tuple(keys[i]) for i in seeds],
        grown_voxels=[tuple(keys[i]) for i in np.flatnonzero(grown)],
        plane=(centroid, normal),
    )


def cluster_points(points, link_distance: float = 0.5) -> list[Cluster]:
    """Single-linkage components: points closer than ``link_distance`` share a cluster."""
    if link_distance <= 0:
        raise ValueError("link_distance must be > 0")
    pts = np.asarray(points, dtype=float).reshape(-1, 3)
    if len(pts) == 0:
        return []
    pairs = SpatialIndex(pts).pairs_within(np.nextafter(link_distance, 0.0))
    graph = coo_matrix((np.ones(len(pairs), dtype=np.int8), (pairs[:, 0], pairs[:, 1])), shape=(len(pts), len(pts)))
    _, labels = connected_components(graph, directed=False)
    order = np.argsort(labels, kind="stable")
    bounds = np.flatnonzero(np.diff(labels[order])) + 1
    clusters = []
    for members in np.split(order, bounds):
        sub = pts[members]
        clusters.append(Cluster(np.sort(members), sub.min(axis=0), sub.max(axis=0)))
    clusters.sort(key=lambda c: c.indices[0])
    return clusters


def is_large(cluster: Cluster, box=(14.0, 14.0, 4.0)) -> bool:
    return bool(np.any(cluster.extent >= np.asarray(box)))


def small_object_mask(cloud, cfg=None, *, ground: GroundLabeling | None = None) -> np.ndarray:
    """Boolean keep-mask: ground points plus clusters reaching any bbox threshold."""
    pts = np.asarray(cloud, dtype=float).reshape(-1, 3)
    link = cfg.cluster_link if cfg is not None else 0.5
    box = cfg.removal_box if cfg is not None else (14.0, 14.0, 4.0)
    if ground is None:
        params = GroundParams.from_config(cfg) if cfg is not None else GroundParams()
        try:
            ground = extract_ground(pts, params)
            is_ground = ground.is_ground
        except NoGroundFound:
            is_ground = np.zeros(len(pts), dtype=bool)
    else:
        is_ground = ground.is_ground
    keep = is_ground.copy()
    rest = np.flatnonzero(~is_ground)
    for cl in cluster_points(pts[rest], link):
        if is_large(cl, box):
            keep[rest[cl.indices]] = True
    return keep


def remove_small_objects(cloud, cfg=None) -> np.ndarray:
    pts = np.asarray(cloud, dtype=float).reshape(-1, 3)
    return pts[small_object_mask(pts, cfg)]
