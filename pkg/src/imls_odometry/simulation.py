"""Synthetic spinning-LiDAR simulator producing sweeps with ground truth.

World frame is Z up.  The sensor frame is the vehicle frame (X right,
Y forward, Z up).  Rays of one sweep are cast from the pose interpolated
between the sweep's start and end poses at the ray's azimuth fraction, so
de-skewing with the true poses is exact.
"""

from __future__ import annotations

import math
import shlex
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .geometry import RigidTransform, interpolate_many, rot_z
from .scan_io import Sweep

_EPS = 1e-9


def _f(v) -> str:
    """Shortest text that reads back to the same float."""
    return repr(float(v))


def heading_rotation(heading: float) -> np.ndarray:
    """Vehicle rotation whose forward axis (Y) points along ``heading`` in the world XY plane."""
    return rot_z(heading - math.pi / 2.0)


# ---------------------------------------------------------------- trajectories

def ramped_distance(t: float, speed: float, ramp: float) -> float:
    """Distance travelled from rest at t = 0 with a raised-cosine speed ramp of length ``ramp``."""
    if t <= 0.0:
        return 0.0
    if t < ramp:
        return speed * (t / 2.0 - ramp / (2.0 * math.pi) * math.sin(math.pi * t / ramp))
    return speed * (t - ramp / 2.0)


@dataclass
class StaticTrajectory:
    x: float = 0.0
    y: float = 0.0
    z: float = 1.8
    heading_deg: float = 90.0

    def pose_at(self, t: float) -> RigidTransform:
        return RigidTransform(heading_rotation(math.radians(self.heading_deg)), (self.x, self.y, self.z))

    def describe(self) -> str:
        return f"trajectory static x={_f(self.x)} y={_f(self.y)} z={_f(self.z)} heading={_f(self.heading_deg)}"


@dataclass
class LineTrajectory:
    """Straight line from (x, y, z); at rest for t <= 0 when ``ramp`` > 0, else constant speed."""

    speed: float = 10.0
    heading_deg: float = 90.0
    x: float = 0.0
    y: float = 0.0
    z: float = 1.8
    ramp: float = 0.0

    def distance(self, t: float) -> float:
        if self.ramp <= 0.0:
            return self.speed * t
        return ramped_distance(t, self.speed, self.ramp)

    def arclength(self, t: float) -> float:
        return self.distance(t)

    def pose_at_arclength(self, s: float) -> RigidTransform:
        h = math.radians(self.heading_deg)
        p = np.array([self.x, self.y, self.z]) + s * np.array([math.cos(h), math.sin(h), 0.0])
        return RigidTransform(heading_rotation(h), p)

    def pose_at(self, t: float) -> RigidTransform:
        return self.pose_at_arclength(self.distance(t))

    def describe(self) -> str:
        return (f"trajectory line speed={_f(self.speed)} heading={_f(self.heading_deg)} "
                f"x={_f(self.x)} y={_f(self.y)} z={_f(self.z)} ramp={_f(self.ramp)}")


@dataclass
class LoopTrajectory:
    """Closed rounded-square loop driven counter-clockwise from the origin.

    Heading along arc length s is ``2 pi s / L - q sin(8 pi s / L)``; the
    four-fold symmetry closes the loop exactly.  ``q`` in [0, 0.25) controls
    squareness.  With ``ramp`` > 0 the vehicle is at rest for t <= 0 and
    speeds up over ``ramp`` seconds with a raised-cosine profile; either way
    the loop is completed at ``duration``.
    """

    perimeter: float = 200.0
    duration: float = 7.9
    squareness: float = 0.2
    ramp: float = 0.0
    z: float = 1.8
    _grid: np.ndarray = field(init=False, repr=False)
    _xy: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if not 0.0 <= self.squareness < 0.25:
            raise ValueError("squareness must lie in [0, 0.25)")
        if self.duration <= self.ramp / 2.0:
            raise ValueError("duration too short for the ramp")
        self._grid = np.linspace(0.0, self.perimeter, 40001)
        psi = self.heading(self._grid)
        x = cumulative_trapezoid(np.cos(psi), self._grid, initial=0.0)
        y = cumulative_trapezoid(np.sin(psi), self._grid, initial=0.0)
        self._xy = np.column_stack([x, y])
        self._xy[-1] = 0.0

    @property
    def cruise_speed(self) -> float:
        return self.perimeter / (self.duration - self.ramp / 2.0)

    def heading(self, s):
        L = self.perimeter
        return 2.0 * np.pi * s / L - self.squareness * np.sin(8.0 * np.pi * s / L)

    def arclength(self, t: float) -> float:
        if self.ramp <= 0.0:
            return self.cruise_speed * t
        return ramped_distance(t, self.cruise_speed, self.ramp)

    def position(self, s: float) -> np.ndarray:
        sm = s % self.perimeter
        x = np.interp(sm, self._grid, self._xy[:, 0])
        y = np.interp(sm, self._grid, self._xy[:, 1])
        return np.array([x, y, self.z])

    def pose_at_arclength(self, s: float) -> RigidTransform:
        return RigidTransform(heading_rotation(float(self.heading(s))), self.position(s))

    def pose_at(self, t: float) -> RigidTransform:
        return self.pose_at_arclength(self.arclength(t))

    def centerline(self, num: int = 400) -> np.ndarray:
        s = np.linspace(0.0, self.perimeter, num, endpoint=False)
        return np.array([self.position(v) for v in s]), self.heading(s)

    def describe(self) -> str:
        return (f"trajectory loop perimeter={_f(self.perimeter)} duration={_f(self.duration)} "
                f"squareness={_f(self.squareness)} ramp={_f(self.ramp)} z={_f(self.z)}")


# ---------------------------------------------------------------- primitives

@dataclass
class Plane:
    point: np.ndarray
    normal: np.ndarray
    dynamic = False
    kind = "plane"

    def __post_init__(self):
        self.point = np.asarray(self.point, dtype=float)
        n = np.asarray(self.normal, dtype=float)
        self.normal = n / np.linalg.norm(n)

    def intersect(self, o, d, t_now):
        denom = d @ self.normal
        with np.errstate(divide="ignore", invalid="ignore"):
            t = ((self.point - o) @ self.normal) / denom
        return np.where((np.abs(denom) > 1e-12) & (t > _EPS), t, np.inf)

    def describe(self) -> str:
        return "plane " + " ".join(_f(v) for v in (*self.point, *self.normal))


def _slab(o_local, d_local, half):
    safe = np.where(np.abs(d_local) < 1e-15, 1e-15, d_local)
    t1 = (-half - o_local) / safe
    t2 = (half - o_local) / safe
    t_near = np.minimum(t1, t2).max(axis=1)
    t_far = np.maximum(t1, t2).min(axis=1)
    hit = (t_near <= t_far) & (t_near > _EPS)
    return np.where(hit, t_near, np.inf)


@dataclass
class Box:
    center: np.ndarray
    size: np.ndarray
    yaw_deg: float = 0.0
    dynamic = False
    kind = "box"

    def __post_init__(self):
        self.center = np.asarray(self.center, dtype=float)
        self.size = np.asarray(self.size, dtype=float)

    def intersect(self, o, d, t_now):
        r = rot_z(math.radians(self.yaw_deg))
        return _slab((o - self.center) @ r, d @ r, self.size / 2.0)

    def describe(self) -> str:
        return "box " + " ".join(_f(v) for v in (*self.center, *self.size, self.yaw_deg))


@dataclass
class Cylinder:
    """Vertical capped cylinder with its base center at ``base``."""

    base: np.ndarray
    radius: float
    height: float
    dynamic = False
    kind = "cylinder"

    def __post_init__(self):
        self.base = np.asarray(self.base, dtype=float)

    def intersect(self, o, d, t_now):
        ox, oy = o[:, 0] - self.base[0], o[:, 1] - self.base[1]
        oz = o[:, 2] - self.base[2]
        dx, dy, dz = d[:, 0], d[:, 1], d[:, 2]
        a = dx * dx + dy * dy
        b = 2.0 * (ox * dx + oy * dy)
        c = ox * ox + oy * oy - self.radius ** 2
        disc = b * b - 4.0 * a * c
        best = np.full(len(d), np.inf)
        with np.errstate(divide="ignore", invalid="ignore"):
            sq = np.sqrt(np.where(disc >= 0, disc, np.nan))
            for t in ((-b - sq) / (2.0 * a), (-b + sq) / (2.0 * a)):
                z = oz + t * dz
                ok = (t > _EPS) & (z >= 0.0) & (z <= self.height)
                best = np.where(ok & (t < best), t, best)
            for zc in (0.0, self.height):
                t = (zc - oz) / dz
                rx, ry = ox + t * dx, oy + t * dy
                ok = (t > _EPS) & (rx * rx + ry * ry <= self.radius ** 2)
                best = np.where(ok & (t < best), t, best)
        return best

    def describe(self) -> str:
        return f"cylinder {_f(self.base[0])} {_f(self.base[1])} {_f(self.base[2])} {_f(self.radius)} {_f(self.height)}"


@dataclass
class MovingBox:
    """Box translating with constant velocity; ``center`` is its position at t = 0."""

    center: np.ndarray
    size: np.ndarray
    yaw_deg: float
    velocity: np.ndarray
    dynamic = True
    kind = "moving_box"

    def __post_init__(self):
        self.center = np.asarray(self.center, dtype=float)
        self.size = np.asarray(self.size, dtype=float)
        self.velocity = np.asarray(self.velocity, dtype=float)

    def intersect(self, o, d, t_now):
        r = rot_z(math.radians(self.yaw_deg))
        c = self.center + np.asarray(t_now, dtype=float)[:, None] * self.velocity
        return _slab(np.einsum("ni,ij->nj", o - c, r), d @ r, self.size / 2.0)

    def describe(self) -> str:
        return "moving_box " + " ".join(_f(v) for v in (*self.center, *self.size, self.yaw_deg, *self.velocity))


@dataclass
class FollowBox:
    """Box driving along the sensor's path ``lead`` meters ahead (negative: behind).

    It shares the sensor's speed profile, so it looks static to the sensor.
    ``lateral`` is measured along the box's own right axis; the box rests on
    z = 0 and is aligned with the direction of travel.
    """

    size: np.ndarray
    lead: float
    lateral: float
    trajectory: object = None
    dynamic = True
    kind = "follow_box"

    def __post_init__(self):
        self.size = np.asarray(self.size, dtype=float)

    def _frame(self, t):
        pose = self.trajectory.pose_at_arclength(self.trajectory.arclength(t) + self.lead)
        center = pose.apply([self.lateral, 0.0, 0.0])
        center[2] = self.size[2] / 2.0
        return pose.rotation, center

    def intersect(self, o, d, t_now):
        t_now = np.asarray(t_now, dtype=float)
        out = np.full(len(d), np.inf)
        for tv in np.unique(t_now):
            sel = t_now == tv
            r, c = self._frame(float(tv))
            out[sel] = _slab((o[sel] - c) @ r, d[sel] @ r, self.size / 2.0)
        return out

    def describe(self) -> str:
        return f"follow_box {_f(self.size[0])} {_f(self.size[1])} {_f(self.size[2])} lead={_f(self.lead)} lateral={_f(self.lateral)}"


# ---------------------------------------------------------------- scene

@dataclass
class SensorModel:
    beams: int = 32
    azimuth_steps: int = 360
    fov_up: float = 10.67
    fov_down: float = -30.67
    noise: float = 0.0
    max_range: float = 100.0

    def directions(self) -> tuple[np.ndarray, np.ndarray]:
        """Sensor-frame unit directions (azimuth-major, lowest beam first) and time fractions."""
        elev = np.radians(np.linspace(self.fov_down, self.fov_up, self.beams))
        u = np.arange(self.azimuth_steps) / self.azimuth_steps
        az = 2.0 * np.pi * u
        az_g, el_g = np.meshgrid(az, elev, indexing="ij")
        d = np.stack([np.cos(el_g) * np.cos(az_g), np.cos(el_g) * np.sin(az_g), np.sin(el_g)], axis=-1)
        return d.reshape(-1, 3), np.repeat(u, self.beams)


@dataclass
class SyntheticScene:
    primitives: list
    trajectory: object = field(default_factory=StaticTrajectory)
    sensor: SensorModel = field(default_factory=SensorModel)
    sweeps: int = 10
    rate: float = 10.0
    seed: int = 0

    @property
    def dt(self) -> float:
        return 1.0 / self.rate

    def sweep_times(self, k: int) -> tuple[float, float]:
        return (k - 1) * self.dt, k * self.dt

    def truth_poses(self) -> list[RigidTransform]:
        """End-of-sweep poses relative to the first one."""
        raw = [self.trajectory.pose_at(self.sweep_times(k)[1]) for k in range(self.sweeps)]
        inv0 = raw[0].inverse()
        return [inv0 @ p for p in raw]


@dataclass
class SimulatedSweep:
    sweep: Sweep
    start_pose: RigidTransform
    end_pose: RigidTransform
    primitive: np.ndarray
    dynamic: np.ndarray
    ground: np.ndarray


def cast(scene: SyntheticScene, origins, directions, times):
    """First-hit distance and primitive index per ray (inf / -1 on miss)."""
    best = np.full(len(directions), np.inf)
    which = np.full(len(directions), -1, dtype=np.intp)
    for i, prim in enumerate(scene.primitives):
        t = prim.intersect(origins, directions, times)
        closer = t < best
        best[closer] = t[closer]
        which[closer] = i
    return best, which


def simulate_sweep(scene: SyntheticScene, t0: float, t1: float, *, index: int = 0, rng=None,
                   start: RigidTransform | None = None, end: RigidTransform | None = None) -> SimulatedSweep:
    """Cast one sweep over [t0, t1]; returned points are in the sensor frame.

    ``start``/``end`` default to the trajectory poses at t0/t1; the returned
    poses are in the scene's world frame.
    """
    sensor = scene.sensor
    rng = rng if rng is not None else np.random.default_rng(scene.seed)
    start = start or scene.trajectory.pose_at(t0)
    end = end or scene.trajectory.pose_at(t1)
    d_local, u = sensor.directions()
    rots, trans = interpolate_many(start, end, u)
    d_world = np.einsum("nij,nj->ni", rots, d_local)
    times = t0 + u * (t1 - t0)
    rng_dist, which = cast(scene, trans, d_world, times)
    hit = np.isfinite(rng_dist) & (rng_dist <= sensor.max_range)
    noisy = rng_dist[hit] + (rng.normal(0.0, sensor.noise, hit.sum()) if sensor.noise > 0 else 0.0)
    pts = d_local[hit] * noisy[:, None]
    which = which[hit]
    dynamic = np.array([scene.primitives[i].dynamic for i in which], dtype=bool)
    ground = np.array([scene.primitives[i].kind == "plane" for i in which], dtype=bool)
    sweep = Sweep(index, pts, u[hit], None, pre_deskewed=False)
    return SimulatedSweep(sweep, start, end, which, dynamic, ground)


def simulate_run(scene: SyntheticScene) -> tuple[list[SimulatedSweep], list[RigidTransform]]:
    """All sweeps of the scene plus normalized end-of-sweep truth poses."""
    out = []
    for k in range(scene.sweeps):
        t0, t1 = scene.sweep_times(k)
        rng = np.random.default_rng([scene.seed, k])
        out.append(simulate_sweep(scene, t0, t1, index=k, rng=rng))
    return out, scene.truth_poses()


# ---------------------------------------------------------------- scene files

def _split_args(tokens):
    pos, kw = [], {}
    for tok in tokens:
        if "=" in tok:
            k, v = tok.split("=", 1)
            kw[k] = v
        else:
            pos.append(float(tok))
    return pos, kw


_ARITY = {"plane": (6,), "box": (6, 7), "cylinder": (5,), "moving_box": (10,), "follow_box": (3,)}


def parse_scene(text: str) -> SyntheticScene:
    prims = []
    follow = []
    trajectory = StaticTrajectory()
    sensor = SensorModel()
    sweeps, rate, seed = 10, 10.0, 0
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        head, *rest = shlex.split(line)
        try:
            pos, kw = _split_args(rest) if head != "trajectory" else ([], {})
            if head in _ARITY and len(pos) not in _ARITY[head]:
                raise ValueError(f"{head} takes {' or '.join(map(str, _ARITY[head]))} numbers, got {len(pos)}")
            if head == "plane":
                prims.append(Plane(pos[0:3], pos[3:6]))
            elif head == "box":
                prims.append(Box(pos[0:3], pos[3:6], pos[6] if len(pos) > 6 else 0.0))
            elif head == "cylinder":
                prims.append(Cylinder(pos[0:3], pos[3], pos[4]))
            elif head == "moving_box":
                prims.append(MovingBox(pos[0:3], pos[3:6], pos[6], pos[7:10]))
            elif head == "follow_box":
                fb = FollowBox(pos[0:3], float(kw.get("lead", 1.0)), float(kw.get("lateral", 0.0)))
                prims.append(fb)
                follow.append(fb)
            elif head == "sensor":
                sensor = SensorModel(
                    beams=int(kw.get("beams", sensor.beams)),
                    azimuth_steps=int(kw.get("azimuth_steps", sensor.azimuth_steps)),
                    fov_up=float(kw.get("fov_up", sensor.fov_up)),
                    fov_down=float(kw.get("fov_down", sensor.fov_down)),
                    noise=float(kw.get("noise", sensor.noise)),
                    max_range=float(kw.get("max_range", sensor.max_range)),
                )
            elif head == "sweeps":
                sweeps = int(kw.get("count", sweeps))
                rate = float(kw.get("rate", rate))
                seed = int(kw.get("seed", seed))
            elif head == "trajectory":
                kind = rest[0]
                _, kw = _split_args(rest[1:])
                kwf = {k: float(v) for k, v in kw.items()}
                if kind == "static":
                    trajectory = StaticTrajectory(kwf.get("x", 0.0), kwf.get("y", 0.0), kwf.get("z", 1.8),
                                                  kwf.get("heading", 90.0))
                elif kind == "line":
                    trajectory = LineTrajectory(kwf.get("speed", 10.0), kwf.get("heading", 90.0),
                                                kwf.get("x", 0.0), kwf.get("y", 0.0), kwf.get("z", 1.8),
                                                kwf.get("ramp", 0.0))
                elif kind == "loop":
                    trajectory = LoopTrajectory(kwf.get("perimeter", 200.0), kwf.get("duration", 7.9),
                                                kwf.get("squareness", 0.2), kwf.get("ramp", 0.0),
                                                kwf.get("z", 1.8))
                else:
                    raise ValueError(f"unknown trajectory kind {kind!r}")
            else:
                raise ValueError(f"unknown directive {head!r}")
        except (IndexError, ValueError) as exc:
            raise ValueError(f"scene line {lineno}: {exc}") from exc
    for fb in follow:
        fb.trajectory = trajectory
    return SyntheticScene(prims, trajectory, sensor, sweeps, rate, seed)


def dump_scene(scene: SyntheticScene) -> str:
    s = scene.sensor
    lines = [
        f"sensor beams={s.beams} azimuth_steps={s.azimuth_steps} fov_up={_f(s.fov_up)} "
        f"fov_down={_f(s.fov_down)} noise={_f(s.noise)} max_range={_f(s.max_range)}",
        f"sweeps count={scene.sweeps} rate={_f(scene.rate)} seed={scene.seed}",
        scene.trajectory.describe(),
    ]
    lines += [p.describe() for p in scene.primitives]
    return "\n".join(lines) + "\n"


def load_scene(path) -> SyntheticScene:
    with open(path) as fh:
        return parse_scene(fh.read())
