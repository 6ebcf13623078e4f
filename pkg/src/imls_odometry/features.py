"""Per-point PCA normals and the planarity scalar a2d = (s2 - s3) / s1."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .spatial import SpatialIndex

_DEGENERATE_EIGEN = 1e-12
_FALLBACK_NORMAL = np.array([0.0, 0.0, 1.0])


class TooFewPoints(ValueError):
    pass


@dataclass
class FeaturedCloud:
    points: np.ndarray
    normals: np.ndarray
    a2d: np.ndarray
    usable: np.ndarray

    def __len__(self):
        return len(self.points)

    def subset(self, mask) -> "FeaturedCloud":
        return FeaturedCloud(self.points[mask], self.normals[mask], self.a2d[mask], self.usable[mask])


def planarity(eigvals) -> np.ndarray:
    """a2d from eigenvalues sorted descending along the last axis."""
    lam = np.clip(np.asarray(eigvals, dtype=float), 0.0, None)
    sig = np.sqrt(lam)
    with np.errstate(divide="ignore", invalid="ignore"):
        a = (sig[..., 1] - sig[..., 2]) / sig[..., 0]
    return np.where(lam[..., 0] < _DEGENERATE_EIGEN, 0.0, np.clip(a, 0.0, 1.0))


def neighborhood_pca(points, neighbor_idx):
    """Eigenvalues (descending) and smallest-eigenvalue eigenvectors of each neighborhood."""
    nb = points[neighbor_idx]
    centered = nb - nb.mean(axis=1, keepdims=True)
    cov = np.einsum("nki,nkj->nij", centered, centered) / neighbor_idx.shape[1]
    vals, vecs = np.linalg.eigh(cov)
    return vals[:, ::-1], vecs[:, :, 0]


def compute_features(cloud, k_neighbors: int = 20, sensor_origin=(0.0, 0.0, 0.0), index: SpatialIndex | None = None) -> FeaturedCloud:
    pts = np.asarray(cloud, dtype=float).reshape(-1, 3)
    if k_neighbors < 3:
        raise ValueError("k_neighbors must be >= 3")
    if len(pts) < k_neighbors:
        raise TooFewPoints(f"{len(pts)} points, need at least {k_neighbors}")
    index = index or SpatialIndex(pts)
    _, nbr = index.knn(pts, k_neighbors)
    vals, normals = neighborhood_pca(pts, nbr)
    usable = vals[:, 0] >= _DEGENERATE_EIGEN
    normals = np.where(usable[:, None], normals, _FALLBACK_NORMAL)
    normals /= np.linalg.norm(normals, axis=1, keepdims=True)
    to_sensor = np.asarray(sensor_origin, dtype=float) - pts
    flip = np.einsum("ij,ij->i", normals, to_sensor) < 0
    normals[flip] *= -1.0
    return FeaturedCloud(pts, normals, planarity(vals), usable)
