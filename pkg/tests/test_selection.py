import numpy as np
import pytest

from sphlab import NeighborCandidate, select_k_fullsort, select_k_quickselect


def _reference_order(d2, idx):
    # independent total order: ascending distance, index breaking ties
    perm = np.lexsort((idx, d2))
    return d2[perm], idx[perm]


def _random_case(rng, n, tie_fraction=0.0):
    d2 = rng.random(n)
    if tie_fraction > 0.0 and n > 1:
        # inject duplicate keys so the index tiebreak actually matters
        dup = rng.integers(0, n, int(n * tie_fraction))
        d2[dup] = d2[rng.integers(0, n, dup.shape[0])]
    idx = rng.permutation(n).astype(np.int64)
    return d2, idx


def test_fullsort_small_example():
    d2 = np.array([4.0, 1.0, 9.0])
    idx = np.array([10, 11, 12], dtype=np.int64)
    select_k_fullsort(d2, idx, 2)
    assert d2.tolist() == [1.0, 4.0, 9.0]
    assert idx.tolist() == [11, 10, 12]


def test_fullsort_matches_reference_order():
    rng = np.random.default_rng(7)
    for trial in range(1000):
        n = int(rng.integers(1, 120))
        d2, idx = _random_case(rng, n, tie_fraction=0.3)
        want_d2, want_idx = _reference_order(d2, idx)
        select_k_fullsort(d2, idx, min(n, 5))
        assert np.array_equal(d2, want_d2), trial
        assert np.array_equal(idx, want_idx), trial


def test_fullsort_is_idempotent():
    rng = np.random.default_rng(8)
    d2, idx = _random_case(rng, 200, tie_fraction=0.5)
    select_k_fullsort(d2, idx, 200)
    snap_d2, snap_idx = d2.copy(), idx.copy()
    select_k_fullsort(d2, idx, 200)
    assert np.array_equal(d2, snap_d2)
    assert np.array_equal(idx, snap_idx)


def test_fullsort_long_arrays_with_few_distinct_keys():
    # adversarial input for a quicksort: long runs of equal keys
    rng = np.random.default_rng(9)
    d2 = rng.integers(0, 4, 5000).astype(np.float64)
    idx = rng.permutation(5000).astype(np.int64)
    want_d2, want_idx = _reference_order(d2, idx)
    select_k_fullsort(d2, idx, 100)
    assert np.array_equal(d2, want_d2)
    assert np.array_equal(idx, want_idx)


def test_fullsort_presorted_and_reversed():
    for order in (1, -1):
        d2 = np.arange(3000, dtype=np.float64)[::order].copy()
        idx = np.arange(3000, dtype=np.int64)[::order].copy()
        select_k_fullsort(d2, idx, 10)
        assert np.array_equal(d2, np.arange(3000, dtype=np.float64))
        assert np.array_equal(idx, np.arange(3000, dtype=np.int64))


def test_quickselect_small_example():
    d2 = np.array([5.0, 1.0, 4.0, 2.0, 3.0])
    idx = np.arange(5, dtype=np.int64)
    select_k_quickselect(d2, idx, 2)
    assert sorted(d2[:2].tolist()) == [1.0, 2.0]
    assert sorted(idx[:2].tolist()) == [1, 3]


def test_quickselect_prefix_is_k_smallest():
    rng = np.random.default_rng(10)
    for trial in range(1000):
        n = int(rng.integers(1, 150))
        k = int(rng.integers(0, n + 1))
        d2, idx = _random_case(rng, n, tie_fraction=0.3)
        pairs = set(zip(d2.tolist(), idx.tolist()))
        want_d2, want_idx = _reference_order(d2, idx)
        select_k_quickselect(d2, idx, k)
        # same multiset of candidates, k smallest in the prefix
        assert set(zip(d2.tolist(), idx.tolist())) == pairs
        got = sorted(zip(d2[:k].tolist(), idx[:k].tolist()))
        want = sorted(zip(want_d2[:k].tolist(), want_idx[:k].tolist()))
        assert got == want, trial


def test_quickselect_all_equal_distances():
    # with every key tied, the index order decides the k nearest
    d2 = np.full(64, 0.25)
    idx = np.random.default_rng(11).permutation(64).astype(np.int64)
    select_k_quickselect(d2, idx, 8)
    assert sorted(idx[:8].tolist()) == list(range(8))


def test_selection_validation():
    d2 = np.array([1.0, 2.0])
    idx = np.array([0, 1], dtype=np.int64)
    for select in (select_k_fullsort, select_k_quickselect):
        with pytest.raises(ValueError, match="cannot select"):
            select(d2.copy(), idx.copy(), 3)
        with pytest.raises(ValueError):
            select(d2.copy(), idx.copy(), -1)
        with pytest.raises(ValueError):
            select(d2.copy(), np.array([0], dtype=np.int64), 1)
        with pytest.raises(ValueError):
            select(d2.reshape(1, 2), idx.copy(), 1)
        before = d2.copy()
        select(d2, idx, 0)  # k = 0 is a no-op for quickselect
        assert np.array_equal(np.sort(d2), np.sort(before))


def test_neighbor_candidate_invariant():
    c = NeighborCandidate(index=5, dist2=1.0)
    assert (c.index, c.dist2) == (5, 1.0)
    with pytest.raises(ValueError):
        NeighborCandidate(index=0, dist2=-1e-9)
