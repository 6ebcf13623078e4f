import numpy as np
import pytest

from imls_odometry.features import FeaturedCloud, compute_features
from imls_odometry.imls import ModelMap
from imls_odometry.sampling import (
    LIST_NAMES,
    InsufficientSamples,
    build_score_lists,
    draw_random_samples,
    draw_samples,
    point_scores,
)


def featured(points, normals, a2d):
    p = np.asarray(points, dtype=float).reshape(-1, 3)
    return FeaturedCloud(p, np.asarray(normals, dtype=float).reshape(-1, 3), np.asarray(a2d, dtype=float),
                         np.ones(len(p), dtype=bool))


def col(name):
    return LIST_NAMES.index(name)


def test_axis_aligned_normal_scores():
    s = point_scores([[0, 0, 0]], [[1, 0, 0]], [1.0])[0]
    assert s[col("trans_x")] == 1 and s[col("trans_y")] == 0 and s[col("trans_z")] == 0


def test_zero_planarity_zeroes_everything():
    s = point_scores([[3, 4, 5]], [[0.6, 0.8, 0]], [0.0])[0]
    assert np.all(s == 0)


def test_hand_cross_product():
    s = point_scores([[0, 10, 0]], [[0, 0, 1]], [1.0])[0]
    # (0,10,0) x (0,0,1) = (10,0,0)
    assert s[col("+rot_x")] == 10 and s[col("-rot_x")] == -10
    assert s[col("+rot_y")] == 0 and s[col("+rot_z")] == 0


def scene_cloud(seed=0):
    """Ground z=-1.8, a wall facing X at x=8 and a wall facing Y at y=10."""
    rng = np.random.default_rng(seed)
    ground = np.column_stack([rng.uniform(-6, 6, 1500), rng.uniform(-6, 8, 1500), np.full(1500, -1.8)])
    wall_x = np.column_stack([np.full(1000, 8.0), rng.uniform(-6, 8, 1000), rng.uniform(-1.8, 4, 1000)])
    wall_y = np.column_stack([rng.uniform(-6, 6, 1000), np.full(1000, 10.0), rng.uniform(-1.8, 4, 1000)])
    pts = np.vstack([ground, wall_x, wall_y])
    labels = np.repeat([2, 0, 1], [1500, 1000, 1000])
    return pts, labels


def self_model(f):
    return ModelMap(capacity=5).insert(f.points, f.normals)


def test_self_match_takes_list_heads():
    pts, _ = scene_cloud()
    f = compute_features(pts, 20)
    lists = build_score_lists(f)
    s = 50
    got = draw_samples(lists, self_model(f), s, 0.2, f.points)
    assert len(got) == 9 * s
    for k in range(9):
        assert np.array_equal(got.indices[got.list_ids == k], lists.orders[k][:s])


def test_displaced_model_is_insufficient():
    pts, _ = scene_cloud()
    f = compute_features(pts, 20)
    model = ModelMap(capacity=5).insert(f.points + 2.0 * np.ones(3) / np.sqrt(3), f.normals)  # 10 r away
    with pytest.raises(InsufficientSamples):
        draw_samples(build_score_lists(f), model, 100, 0.2, f.points)


def test_multiplicity_matches_prefix_oracle():
    pts, _ = scene_cloud(1)
    f = compute_features(pts, 20)
    model = ModelMap(capacity=5).insert(f.points[::2], f.normals[::2])
    s, r = 40, 0.2
    got = draw_samples(build_score_lists(f), model, s, r, f.points)
    near = np.array([np.linalg.norm(model.points - p, axis=1).min() for p in f.points])
    ok = near <= r
    scores = point_scores(f.points, f.normals, f.a2d)
    expected = np.zeros(len(pts), dtype=int)
    for k in range(9):
        order = sorted(range(len(pts)), key=lambda i: (-scores[i, k], i))
        prefix = [i for i in order if ok[i]][:s]
        expected[prefix] += 1
    assert np.array_equal(np.bincount(got.indices, minlength=len(pts)), expected)


def test_tie_break_by_index():
    pts = np.array([[0, 0, 0], [0, 0, 0], [0, 0, 0]], dtype=float)
    lists = build_score_lists(featured(pts, [[1, 0, 0]] * 3, [1.0] * 3))
    assert lists.orders[col("trans_x")].tolist() == [0, 1, 2]


def test_unusable_points_rank_last():
    f = featured([[0, 10, 0], [0, 1, 0]], [[0, 0, 1], [0, 0, 1]], [1.0, 0.1])
    f.usable[0] = False
    lists = build_score_lists(f)
    assert all(order[-1] == 0 for order in lists.orders)


def test_permutation_invariant_order():
    pts, _ = scene_cloud(2)
    f = compute_features(pts, 20)
    perm = np.random.default_rng(0).permutation(len(pts))
    a = build_score_lists(f)
    b = build_score_lists(f.subset(perm))
    for k in range(9):
        assert np.allclose(a.scores[a.orders[k], k], b.scores[b.orders[k], k])


def test_translation_lists_pick_matching_surfaces():
    pts, labels = scene_cloud(3)
    f = compute_features(pts, 20)
    lists = build_score_lists(f)
    for axis, name in enumerate(("trans_x", "trans_y", "trans_z")):
        head = lists.orders[col(name)][:100]
        assert np.all(labels[head] == axis)


def test_random_sampling_budget():
    pts, _ = scene_cloud()
    f = compute_features(pts, 20)
    got = draw_random_samples(len(f), self_model(f), 900, 0.2, f.points, np.random.default_rng(0))
    assert len(got) == 900 and len(np.unique(got.indices)) == 900
