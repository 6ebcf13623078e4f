"""Ready-made synthetic scenes used by the tests, the benchmark and ``simulate``."""

from __future__ import annotations

import numpy as np

from .simulation import (
    Box,
    Cylinder,
    FollowBox,
    LineTrajectory,
    LoopTrajectory,
    MovingBox,
    Plane,
    SensorModel,
    StaticTrajectory,
    SyntheticScene,
)


def ground() -> Plane:
    return Plane((0.0, 0.0, 0.0), (0.0, 0.0, 1.0))


def square_loop_scene(seed: int = 0, *, dynamic: bool = True, noise: float = 0.02, sweeps: int = 80,
                      perimeter: float = 200.0, beams: int = 32, azimuth_steps: int = 360,
                      ramp: float = 3.0, squareness: float = 0.05) -> SyntheticScene:
    """City loop: building rows with side streets on both sides, trees, poles, parked and moving cars.

    ``seed`` drives both the layout jitter and the range noise.
    """
    rng = np.random.default_rng(seed)
    traj = LoopTrajectory(perimeter=perimeter, duration=(sweeps - 1) / 10.0, squareness=squareness, ramp=ramp)
    prims: list = [ground()]
    # building rows on both sides of the street, aligned with it, with side streets and setbacks
    for side in (-1.0, 1.0):
        s = rng.uniform(0.0, 4.0)
        while s < perimeter:
            length = rng.uniform(10.0, 18.0)
            mid = s + length / 2.0
            p = traj.position(mid)
            h = float(traj.heading(mid))
            right = np.array([np.sin(h), -np.cos(h)])
            depth = rng.uniform(6.0, 10.0)
            offset = rng.uniform(7.0, 10.0) + depth / 2.0
            c = p[:2] + side * offset * right
            height = rng.uniform(7.0, 15.0)
            prims.append(Box((*c, height / 2.0), (depth, length, height), float(np.degrees(h)) - 90.0))
            s += length + rng.uniform(3.0, 7.0)

    # trees and poles on the outer sidewalk
    s_vals = np.arange(5.0, perimeter, 17.0)
    for s in s_vals:
        p = traj.position(s)
        h = float(traj.heading(s))
        right = np.array([np.sin(h), -np.cos(h)])
        off = rng.uniform(4.5, 5.5)
        base = p[:2] + off * right
        if rng.random() < 0.5:
            prims.append(Cylinder((*base, 0.0), rng.uniform(1.2, 1.6), rng.uniform(6.0, 9.0)))
        else:
            prims.append(Cylinder((*base, 0.0), 0.15, rng.uniform(4.0, 7.0)))

    # parked cars on the inner side
    for s in np.arange(11.0, perimeter, 29.0):
        p = traj.position(s)
        h = float(traj.heading(s))
        left = np.array([-np.sin(h), np.cos(h)])
        c = p[:2] + 3.2 * left
        prims.append(Box((*c, 0.75), (4.2, 1.9, 1.5), float(np.degrees(h))))

    if dynamic:
        prims.append(FollowBox((1.9, 4.5, 1.6), lead=9.0, lateral=0.0, trajectory=traj))
        prims.append(FollowBox((2.0, 5.0, 1.8), lead=-10.0, lateral=0.0, trajectory=traj))
        prims.append(FollowBox((1.9, 4.2, 1.5), lead=4.0, lateral=-3.2, trajectory=traj))
        for s in (perimeter * 0.3, perimeter * 0.7):
            p = traj.position(s)
            h = float(traj.heading(s))
            left = np.array([-np.sin(h), np.cos(h)])
            c = p[:2] + 12.0 * left
            vel = -6.0 * left
            prims.append(MovingBox((*c, 0.8), (4.5, 2.0, 1.6), float(np.degrees(h)) + 90.0, (*vel, 0.0)))

    sensor = SensorModel(beams=beams, azimuth_steps=azimuth_steps, noise=noise)
    return SyntheticScene(prims, traj, sensor, sweeps=sweeps, rate=10.0, seed=seed)


def corridor_scene(seed: int = 0, *, speed: float = 10.0, sweeps: int = 50, noise: float = 0.0,
                   beams: int = 32, azimuth_steps: int = 360, ramp: float = 1.5) -> SyntheticScene:
    """Straight street between two building rows with side streets, driven at constant speed."""
    rng = np.random.default_rng(seed)
    length = speed * sweeps / 10.0 + 80.0
    prims: list = [ground()]
    for side in (-1.0, 1.0):
        y = -40.0
        while y < length:
            blen = rng.uniform(10.0, 20.0)
            depth = rng.uniform(6.0, 10.0)
            height = rng.uniform(8.0, 14.0)
            prims.append(Box((side * (7.0 + depth / 2.0), y + blen / 2.0, height / 2.0), (depth, blen, height)))
            y += blen + rng.uniform(3.0, 6.0)
    for y in np.arange(-30.0, length, 13.0):
        prims.append(Cylinder((rng.choice([-4.5, 4.5]), y, 0.0), rng.uniform(1.2, 1.6), rng.uniform(6.0, 9.0)))
    traj = LineTrajectory(speed=speed, heading_deg=90.0, x=0.0, y=0.0, z=1.8, ramp=ramp)
    sensor = SensorModel(beams=beams, azimuth_steps=azimuth_steps, noise=noise)
    return SyntheticScene(prims, traj, sensor, sweeps=sweeps, rate=10.0, seed=seed)


def static_scene(seed: int = 0, sweeps: int = 10, noise: float = 0.0) -> SyntheticScene:
    scene = corridor_scene(seed, speed=0.0, sweeps=sweeps, noise=noise)
    scene.trajectory = StaticTrajectory(0.0, 0.0, 1.8, 90.0)
    return scene


def cylinder_room(radius: float = 1.0) -> SyntheticScene:
    """Sensor on the axis of a tall open cylinder (hit from inside)."""
    return SyntheticScene([_InsideCylinder(radius)], StaticTrajectory(0.0, 0.0, 0.0), SensorModel(noise=0.0), sweeps=1)


class _InsideCylinder:
    dynamic = False
    kind = "cylinder"

    def __init__(self, radius: float, half_height: float = 1e3):
        self.radius = radius
        self.half_height = half_height

    def intersect(self, o, d, t_now):
        a = d[:, 0] ** 2 + d[:, 1] ** 2
        b = 2.0 * (o[:, 0] * d[:, 0] + o[:, 1] * d[:, 1])
        c = o[:, 0] ** 2 + o[:, 1] ** 2 - self.radius ** 2
        with np.errstate(divide="ignore", invalid="ignore"):
            t = (-b + np.sqrt(b * b - 4 * a * c)) / (2 * a)
        z = o[:, 2] + t * d[:, 2]
        return np.where((a > 1e-12) & (np.abs(z) <= self.half_height), t, np.inf)

    def describe(self) -> str:
        return f"# inside-cylinder radius={self.radius:g}"


def box_room(size=(40.0, 30.0, 12.0)) -> SyntheticScene:
    """Large closed box around the origin, seen from inside (six inward planes)."""
    sx, sy, sz = (v / 2.0 for v in size)
    prims = [
        Plane((0, 0, 0), (0, 0, 1)), Plane((0, 0, 2 * sz), (0, 0, -1)),
        Plane((-sx, 0, 0), (1, 0, 0)), Plane((sx, 0, 0), (-1, 0, 0)),
        Plane((0, -sy, 0), (0, 1, 0)), Plane((0, sy, 0), (0, -1, 0)),
    ]
    return SyntheticScene(prims, StaticTrajectory(0.0, 0.0, 1.8), SensorModel(noise=0.0), sweeps=2)


def corner_room(noise: float = 0.0, seed: int = 0) -> SyntheticScene:
    """Floor plus two orthogonal walls; the three planes pin down all six degrees of freedom."""
    prims = [ground(), Plane((5.0, 0.0, 0.0), (-1.0, 0.0, 0.0)), Plane((0.0, 6.0, 0.0), (0.0, -1.0, 0.0))]
    sensor = SensorModel(noise=noise, max_range=20.0)
    return SyntheticScene(prims, StaticTrajectory(0.0, 0.0, 1.8, 90.0), sensor, sweeps=2, seed=seed)
