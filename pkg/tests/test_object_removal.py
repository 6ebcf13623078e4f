import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from imls_odometry.object_removal import (
    NoGroundFound,
    cluster_points,
    extract_ground,
    remove_small_objects,
    small_object_mask,
)
from imls_odometry.scan_io import RunConfig
from imls_odometry.simulation import Box, MovingBox, Plane, SensorModel, StaticTrajectory, SyntheticScene, simulate_sweep


def ground_grid(z=-1.7, half=15.0, step=0.25):
    g = np.arange(-half, half + 1e-9, step)
    x, y = np.meshgrid(g, g)
    return np.column_stack([x.ravel(), y.ravel(), np.full(x.size, z)])


def box_surface(center, size, step=0.1, z0=None):
    """Points on the four walls and the top of an axis-aligned box."""
    cx, cy, cz = center
    sx, sy, sz = size
    xs = np.arange(-sx / 2, sx / 2 + 1e-9, step)
    ys = np.arange(-sy / 2, sy / 2 + 1e-9, step)
    zs = np.arange(-sz / 2, sz / 2 + 1e-9, step)
    pts = []
    for x in (-sx / 2, sx / 2):
        yy, zz = np.meshgrid(ys, zs)
        pts.append(np.column_stack([np.full(yy.size, x), yy.ravel(), zz.ravel()]))
    for y in (-sy / 2, sy / 2):
        xx, zz = np.meshgrid(xs, zs)
        pts.append(np.column_stack([xx.ravel(), np.full(xx.size, y), zz.ravel()]))
    xx, yy = np.meshgrid(xs, ys)
    pts.append(np.column_stack([xx.ravel(), yy.ravel(), np.full(xx.size, sz / 2)]))
    return np.vstack(pts) + [cx, cy, cz]


def on_ground(center_xy, size, z=-1.7):
    return box_surface((center_xy[0], center_xy[1], z + size[2] / 2), size)


def test_flat_plane_is_all_ground():
    g = extract_ground(ground_grid())
    assert g.is_ground.all()
    centroid, normal = g.plane
    assert centroid[2] == pytest.approx(-1.7)
    assert abs(normal[2]) == pytest.approx(1.0)


def test_plane_and_box_labels():
    plane = ground_grid()
    box = on_ground((5.0, 3.0), (2.0, 2.0, 2.0))
    g = extract_ground(np.vstack([plane, box]))
    assert g.is_ground[: len(plane)].all()
    # only the box's bottom band (within the ground band) may be labeled ground
    box_z = box[:, 2]
    assert not g.is_ground[len(plane):][box_z > -1.7 + 0.25].any()


def test_wall_has_no_ground():
    y, z = np.meshgrid(np.arange(-10, 10, 0.2), np.arange(-1.5, 6, 0.2))
    wall = np.column_stack([np.full(y.size, 5.0), y.ravel(), z.ravel()])
    with pytest.raises(NoGroundFound):
        extract_ground(wall)


def test_cluster_threshold_pairs():
    assert len(cluster_points([[0, 0, 0], [0.4, 0, 0]])) == 1
    assert len(cluster_points([[0, 0, 0], [0.6, 0, 0]])) == 2
    assert cluster_points(np.empty((0, 3))) == []
    with pytest.raises(ValueError):
        cluster_points([[0, 0, 0]], 0.0)


def union_find_components(pts, link):
    parent = list(range(len(pts)))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(len(pts)):
        for j in range(i + 1, len(pts)):
            if np.linalg.norm(pts[i] - pts[j]) < link:
                parent[find(i)] = find(j)
    groups = {}
    for i in range(len(pts)):
        groups.setdefault(find(i), []).append(i)
    return sorted(tuple(g) for g in groups.values())


def test_chain_is_one_cluster():
    chain = np.column_stack([np.arange(0, 20.0 + 1e-9, 0.45), np.zeros(45), np.zeros(45)])
    cl = cluster_points(chain)
    assert len(cl) == 1
    assert cl[0].extent[0] == pytest.approx(19.8)
    assert [tuple(c.indices) for c in cl] == union_find_components(chain, 0.5)


def test_clusters_match_union_find_oracle():
    rng = np.random.default_rng(5)
    pts = rng.uniform(0, 6, size=(250, 3))
    got = sorted(tuple(c.indices.tolist()) for c in cluster_points(pts, 0.5))
    assert got == union_find_components(pts, 0.5)
    for c in cluster_points(pts, 0.5):
        assert np.all(pts[c.indices] >= c.bbox_min) and np.all(pts[c.indices] <= c.bbox_max)


def test_car_removed_facade_and_tree_kept():
    plane = ground_grid()
    car = on_ground((6.0, 2.0), (4.0, 2.0, 1.5))
    facade = on_ground((0.0, 12.0), (30.0, 0.3, 8.0))
    tree = on_ground((-6.0, -4.0), (3.0, 3.0, 6.0))
    cloud = np.vstack([plane, car, facade, tree])
    keep = small_object_mask(cloud, RunConfig())
    a, b, c = len(plane), len(plane) + len(car), len(plane) + len(car) + len(facade)
    assert keep[:a].all()
    assert not keep[a:b][car[:, 2] > -1.7 + 0.25].any()
    assert keep[b:c].all()
    assert keep[c:].all()
    out = remove_small_objects(cloud, RunConfig())
    assert len(out) == keep.sum()


def test_removal_never_drops_ground_and_returns_subset():
    plane = ground_grid()
    cloud = np.vstack([plane, on_ground((6.0, 2.0), (4.0, 2.0, 1.5))])
    cloud += np.random.default_rng(0).normal(scale=1e-4, size=cloud.shape)  # distinct coordinates
    out = remove_small_objects(cloud)
    assert len(np.unique(out, axis=0)) == len(out) < len(cloud)
    assert {tuple(p) for p in out} <= {tuple(p) for p in cloud}
    assert {tuple(p) for p in cloud[: len(plane)]} <= {tuple(p) for p in out}


@settings(max_examples=15, deadline=None)
@given(st.floats(1.0, 14.0), st.floats(1.0, 14.0), st.floats(0.5, 4.0), st.floats(0.3, 1.0))
def test_removal_monotone_in_thresholds(bx, by, bz, shrink):
    rng = np.random.default_rng(2)
    cloud = np.vstack([ground_grid(half=10.0, step=0.4)] + [
        on_ground(rng.uniform(-8, 8, 2), rng.uniform(0.5, 10.0, 3)) for _ in range(4)])
    big = small_object_mask(cloud, RunConfig(removal_box=(bx, by, bz)))
    small = small_object_mask(cloud, RunConfig(removal_box=(bx * shrink, by * shrink, bz * shrink)))
    assert np.all(small >= big)


def test_cluster_partition_permutation_invariant():
    rng = np.random.default_rng(9)
    pts = rng.uniform(0, 8, size=(400, 3))
    perm = rng.permutation(len(pts))
    a = {frozenset(c.indices.tolist()) for c in cluster_points(pts)}
    b = {frozenset(perm[c.indices].tolist()) for c in cluster_points(pts[perm])}
    assert a == b


def test_simulated_moving_car_is_removed():
    scene = SyntheticScene(
        [Plane((0, 0, 0), (0, 0, 1)), Box((0, 8, 5), (16, 1, 10)),
         MovingBox((6, -3, 0.8), (2.0, 4.5, 1.6), 0.0, (0, 8, 0))],
        StaticTrajectory(0.0, 0.0, 1.8, 90.0), SensorModel(noise=0.0), sweeps=1)
    sim = simulate_sweep(scene, 0.0, 0.1)
    pts = sim.sweep.points
    keep = small_object_mask(pts, RunConfig())
    dyn = sim.dynamic
    assert dyn.sum() > 50
    high = dyn & (pts[:, 2] > -1.8 + 0.3)
    assert not keep[high].any()
    assert keep[sim.ground].all()
    static_wall = sim.primitive == 1
    assert keep[static_wall].all()
