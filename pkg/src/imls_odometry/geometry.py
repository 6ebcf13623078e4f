"""Rigid transforms, pose interpolation and the linearized point-to-plane solve.

Conventions: a ``RigidTransform`` maps points from its local frame into the
parent frame, ``p_parent = R @ p_local + t``.  ``compose(a, b)`` applies ``b``
first, then ``a``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.transform import Rotation

_ORTHO_TOL = 1e-6
_REPROJECT_TOL = 1e-12
_MAX_CONDITION = 1e12


class DegenerateSystem(ValueError):
    """The 6x6 point-to-plane system cannot determine all pose parameters."""


def _project_to_so3(m: np.ndarray) -> np.ndarray:
    u, _, vt = np.linalg.svd(m)
    r = u @ vt
    if np.linalg.det(r) < 0:
        u[:, -1] = -u[:, -1]
        r = u @ vt
    return r


@dataclass(frozen=True)
class RigidTransform:
    rotation: np.ndarray = field(default_factory=lambda: np.eye(3))
    translation: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        r = np.array(self.rotation, dtype=float).reshape(3, 3)
        t = np.array(self.translation, dtype=float).reshape(3)
        if not (np.all(np.isfinite(r)) and np.all(np.isfinite(t))):
            raise ValueError("transform contains non-finite values")
        drift = np.abs(r.T @ r - np.eye(3)).max()
        if drift > _ORTHO_TOL or np.linalg.det(r) <= 0:
            raise ValueError(f"rotation is not a proper rotation (orthonormality error {drift:.3g})")
        if drift > _REPROJECT_TOL:
            r = _project_to_so3(r)
        r.flags.writeable = False
        t.flags.writeable = False
        object.__setattr__(self, "rotation", r)
        object.__setattr__(self, "translation", t)

    @classmethod
    def identity(cls) -> "RigidTransform":
        return cls()

    @classmethod
    def from_matrix(cls, m) -> "RigidTransform":
        m = np.asarray(m, dtype=float)
        return cls(m[:3, :3], m[:3, 3])

    @classmethod
    def from_rotvec(cls, rotvec, translation=(0.0, 0.0, 0.0)) -> "RigidTransform":
        return cls(Rotation.from_rotvec(np.asarray(rotvec, dtype=float)).as_matrix(), translation)

    def matrix(self) -> np.ndarray:
        m = np.eye(4)
        m[:3, :3] = self.rotation
        m[:3, 3] = self.translation
        return m

    def inverse(self) -> "RigidTransform":
        rt = self.rotation.T
        return RigidTransform(rt, -rt @ self.translation)

    def apply(self, points) -> np.ndarray:
        """Map an (N, 3) array (or a single 3-vector) into the parent frame."""
        p = np.asarray(points, dtype=float)
        return p @ self.rotation.T + self.translation

    def rotate(self, vectors) -> np.ndarray:
        return np.asarray(vectors, dtype=float) @ self.rotation.T

    def rotation_angle(self) -> float:
        return rotation_angle(self.rotation)

    def __matmul__(self, other: "RigidTransform") -> "RigidTransform":
        return compose(self, other)


def rotation_angle(r: np.ndarray) -> float:
    """Angle of a rotation matrix in [0, pi]; atan2 keeps precision near 0 and pi."""
    c = (np.trace(r) - 1.0) / 2.0
    s = np.linalg.norm([r[2, 1] - r[1, 2], r[0, 2] - r[2, 0], r[1, 0] - r[0, 1]]) / 2.0
    return float(np.arctan2(s, c))


def compose(a: RigidTransform, b: RigidTransform) -> RigidTransform:
    """Transform applying ``b`` then ``a``."""
    return RigidTransform(a.rotation @ b.rotation, a.rotation @ b.translation + a.translation)


def inverse(a: RigidTransform) -> RigidTransform:
    return a.inverse()


def rot_z(angle: float) -> np.ndarray:
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def skew(v) -> np.ndarray:
    x, y, z = v
    return np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])


def relative_rotvec(a: RigidTransform, b: RigidTransform) -> np.ndarray:
    """Axis-angle of ``a.R^T b.R`` on the shortest arc (angle in [0, pi])."""
    return Rotation.from_matrix(a.rotation.T @ b.rotation).as_rotvec()


def interpolate(a: RigidTransform, b: RigidTransform, u: float) -> RigidTransform:
    """Linear interpolation of translation, shortest-arc slerp of rotation."""
    if not 0.0 <= u <= 1.0:
        raise ValueError(f"interpolation fraction {u} outside [0, 1]")
    if u == 0.0:
        return a
    if u == 1.0:
        return b
    w = relative_rotvec(a, b)
    r = a.rotation @ Rotation.from_rotvec(u * w).as_matrix()
    t = (1.0 - u) * a.translation + u * b.translation
    return RigidTransform(r, t)


def interpolate_many(a: RigidTransform, b: RigidTransform, u: np.ndarray):
    """Vectorized ``interpolate`` returning (N, 3, 3) rotations and (N, 3) translations."""
    u = np.asarray(u, dtype=float)
    if u.size and (u.min() < 0.0 or u.max() > 1.0):
        raise ValueError("interpolation fractions must lie in [0, 1]")
    w = relative_rotvec(a, b)
    rel = Rotation.from_rotvec(u[:, None] * w[None, :]).as_matrix()
    rots = np.einsum("ij,njk->nik", a.rotation, rel)
    trans = (1.0 - u)[:, None] * a.translation + u[:, None] * b.translation
    return rots, trans


@dataclass(frozen=True)
class SmallMotion:
    """Six solver unknowns: axis-angle rotation (rad) and translation (m)."""

    rotvec: np.ndarray = field(default_factory=lambda: np.zeros(3))
    trans: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        object.__setattr__(self, "rotvec", np.array(self.rotvec, dtype=float).reshape(3))
        object.__setattr__(self, "trans", np.array(self.trans, dtype=float).reshape(3))

    def to_transform(self) -> RigidTransform:
        return RigidTransform.from_rotvec(self.rotvec, self.trans)


def point_to_plane_system(source, target, normals):
    """Rows of the linearized system ``A [w; t] = b``."""
    x = np.asarray(source, dtype=float).reshape(-1, 3)
    y = np.asarray(target, dtype=float).reshape(-1, 3)
    n = np.asarray(normals, dtype=float).reshape(-1, 3)
    a = np.hstack([np.cross(x, n), n])
    b = np.einsum("ij,ij->i", n, y - x)
    return a, b


def solve_point_to_plane(source, target, normals) -> SmallMotion:
    """Minimize sum (n . ((I + [w]x) x + t - y))^2 over (w, t).

    Raises DegenerateSystem when fewer than six constraints are given or the
    normal matrix is singular or badly conditioned.
    """
    a, b = point_to_plane_system(source, target, normals)
    if len(a) < 6:
        raise DegenerateSystem(f"need at least 6 constraints, got {len(a)}")
    h = a.T @ a
    g = a.T @ b
    try:
        chol = np.linalg.cholesky(h)
    except np.linalg.LinAlgError as exc:
        raise DegenerateSystem("normal matrix is not positive definite") from exc
    pivots = np.diag(chol) ** 2
    if pivots.min() <= 0 or pivots.max() / pivots.min() > _MAX_CONDITION:
        raise DegenerateSystem(f"normal matrix condition estimate {pivots.max() / max(pivots.min(), 1e-300):.3g}")
    z = np.linalg.solve(chol, g)
    sol = np.linalg.solve(chol.T, z)
    return SmallMotion(sol[:3], sol[3:])
