import numpy as np
import pytest

from sphlab import (
    DEFAULT_LEAF_CAPACITY,
    QueryWorkspace,
    build_octree,
    range_query,
    validate_tree,
)


def _brute_force(pos, center, radius, exclude=-1):
    d2 = ((pos - np.asarray(center)) ** 2).sum(axis=1)
    hit = d2 <= radius * radius
    if exclude >= 0:
        hit[exclude] = False
    idx = np.nonzero(hit)[0]
    return {int(i): float(d2[i]) for i in idx}


def _query_map(tree, center, radius, ws=None, exclude=-1):
    idx, d2 = range_query(tree, center, radius, workspace=ws, exclude=exclude)
    assert idx.shape == d2.shape
    out = {int(i): float(v) for i, v in zip(idx, d2)}
    assert len(out) == idx.shape[0], "duplicate index in query result"
    return out


def test_single_particle():
    pos = np.array([[0.3, 0.4, 0.5]])
    tree = build_octree(pos)
    assert tree.n_nodes == 1
    root = tree.node(0)
    assert root.is_leaf
    assert root.particle_range == (0, 1)
    assert _query_map(tree, (0.3, 0.4, 0.5), 0.0) == {0: 0.0}
    assert _query_map(tree, (1.0, 1.0, 1.0), 0.1) == {}
    assert validate_tree(tree) == []


def test_eight_octants_capacity_one():
    sites = [0.25, 0.75]
    pos = np.array([(x, y, z) for x in sites for y in sites for z in sites])
    tree = build_octree(pos, leaf_capacity=1)
    assert tree.n_nodes == 9
    root = tree.node(0)
    assert not root.is_leaf
    leaf_sizes = []
    for c in range(root.child_base, root.child_base + 8):
        node = tree.node(c)
        assert node.is_leaf
        lo, hi = node.particle_range
        leaf_sizes.append(hi - lo)
    assert leaf_sizes == [1] * 8
    assert validate_tree(tree) == []


def test_permutation_covers_all_particles():
    rng = np.random.default_rng(0)
    pos = rng.random((500, 3))
    tree = build_octree(pos, leaf_capacity=4)
    assert np.array_equal(np.sort(tree.particle_perm), np.arange(500))
    assert validate_tree(tree) == []


def test_query_matches_brute_force():
    rng = np.random.default_rng(1)
    pos = rng.random((500, 3))
    tree = build_octree(pos)
    ws = QueryWorkspace(capacity=8)  # force the grow-and-retry path
    for trial in range(300):
        center = rng.uniform(-0.2, 1.2, 3)
        radius = float(rng.choice([0.0, 0.02, 0.1, 0.4, 2.5]))
        got = _query_map(tree, center, radius, ws=ws)
        want = _brute_force(pos, center, radius)
        assert got.keys() == want.keys(), trial
        for i in got:
            assert got[i] == want[i] or abs(got[i] - want[i]) < 1e-12


def test_query_boundary_is_inclusive():
    pos = np.array([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 2.0, 0.0]])
    tree = build_octree(pos, leaf_capacity=1)
    assert set(_query_map(tree, (0.0, 0.0, 0.0), 1.0)) == {0, 1}
    assert set(_query_map(tree, (0.0, 0.0, 0.0), 2.0)) == {0, 1, 2}
    assert set(_query_map(tree, (0.0, 0.0, 0.0),
                          np.nextafter(1.0, 0.0))) == {0}


def test_query_exclude_self():
    rng = np.random.default_rng(2)
    pos = rng.random((100, 3))
    tree = build_octree(pos)
    got = _query_map(tree, pos[17], 0.3, exclude=17)
    want = _brute_force(pos, pos[17], 0.3, exclude=17)
    assert got.keys() == want.keys()
    assert 17 not in got


def test_coincident_particles():
    # duplicates cannot be separated; the leaf simply exceeds capacity
    pos = np.vstack([np.full((20, 3), 0.5), np.random.default_rng(3).random((30, 3))])
    tree = build_octree(pos, leaf_capacity=4)
    assert validate_tree(tree) == []
    got = _query_map(tree, (0.5, 0.5, 0.5), 0.0)
    assert set(got) == set(range(20))


def test_build_determinism():
    rng = np.random.default_rng(4)
    pos = rng.random((1000, 3))
    t1 = build_octree(pos)
    t2 = build_octree(pos)
    assert np.array_equal(t1.particle_perm, t2.particle_perm)
    assert np.array_equal(t1.node_center, t2.node_center)
    assert np.array_equal(t1.node_child, t2.node_child)


def test_tuple_of_views_input():
    rng = np.random.default_rng(5)
    pos = rng.random((200, 3))
    t_rows = build_octree(pos)
    t_cols = build_octree((pos[:, 0], pos[:, 1], pos[:, 2]))
    assert np.array_equal(t_rows.particle_perm, t_cols.particle_perm)
    a = _query_map(t_rows, (0.5, 0.5, 0.5), 0.25)
    b = _query_map(t_cols, (0.5, 0.5, 0.5), 0.25)
    assert a == b


def test_many_random_builds_validate():
    rng = np.random.default_rng(6)
    for trial in range(1000):
        n = int(rng.integers(1, 80))
        cap = int(rng.choice([1, 2, 8, 32]))
        scale = float(rng.choice([1e-3, 1.0, 1e6]))
        pos = rng.random((n, 3)) * scale
        tree = build_octree(pos, leaf_capacity=cap)
        problems = validate_tree(tree)
        assert problems == [], f"trial {trial}: {problems[:3]}"


def test_validate_tree_catches_corruption():
    rng = np.random.default_rng(7)
    pos = rng.random((64, 3))
    tree = build_octree(pos, leaf_capacity=2)
    tree.particle_perm[0] = tree.particle_perm[1]
    assert validate_tree(tree) != []


def test_degenerate_and_edge_inputs():
    empty = build_octree(np.empty((0, 3)))
    assert empty.n_particles == 0
    assert _query_map(empty, (0.0, 0.0, 0.0), 10.0) == {}

    with pytest.raises(ValueError):
        build_octree(np.array([[np.nan, 0.0, 0.0]]))
    with pytest.raises(ValueError):
        build_octree(np.random.default_rng(8).random((10, 3)), leaf_capacity=0)
    with pytest.raises(ValueError):
        tree = build_octree(np.random.default_rng(9).random((10, 3)))
        range_query(tree, (0.0, 0.0, 0.0), -1.0)


def test_default_leaf_capacity():
    assert DEFAULT_LEAF_CAPACITY == 8
