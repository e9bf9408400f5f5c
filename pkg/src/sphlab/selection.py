"""Neighbor-candidate selection: full sort vs quickselect.

Candidates are (squared distance, particle index) pairs held in two parallel
arrays and reordered in place. All comparisons use the total order
(dist2, index) so "the k nearest" is a deterministic set even under distance
ties. Both routines are iterative; the quickselect recurses only into the
side holding position k-1 and runs in average linear time.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

_INSERTION_CUTOFF = 16


@dataclass(frozen=True)
class NeighborCandidate:
    index: int
    dist2: float

    def __post_init__(self):
        if self.dist2 < 0.0:
            raise ValueError(f"squared distance must be non-negative, got {self.dist2}")


@njit(cache=True, nogil=True, inline="always")
def _less(d2a, ia, d2b, ib):
    return d2a < d2b or (d2a == d2b and ia < ib)


@njit(cache=True, nogil=True, inline="always")
def _swap(d2, idx, a, b):
    d2[a], d2[b] = d2[b], d2[a]
    idx[a], idx[b] = idx[b], idx[a]


@njit(cache=True, nogil=True)
def _insertion_sort(d2, idx, lo, hi):
    for i in range(lo + 1, hi):
        dv = d2[i]
        iv = idx[i]
        j = i - 1
        while j >= lo and _less(dv, iv, d2[j], idx[j]):
            d2[j + 1] = d2[j]
            idx[j + 1] = idx[j]
            j -= 1
        d2[j + 1] = dv
        idx[j + 1] = iv


@njit(cache=True, nogil=True, inline="always")
def _median_of_three(d2, idx, lo, hi):
    # order d2[lo], d2[mid], d2[hi-1]; the median lands at mid
    mid = (lo + hi - 1) >> 1
    last = hi - 1
    if _less(d2[mid], idx[mid], d2[lo], idx[lo]):
        _swap(d2, idx, mid, lo)
    if _less(d2[last], idx[last], d2[mid], idx[mid]):
        _swap(d2, idx, last, mid)
        if _less(d2[mid], idx[mid], d2[lo], idx[lo]):
            _swap(d2, idx, mid, lo)
    return mid


@njit(cache=True, nogil=True, inline="always")
def _hoare_partition(d2, idx, lo, hi):
    # pivot = median of three; returns j with [lo..j] <= pivot <= [j+1..hi-1]
    mid = _median_of_three(d2, idx, lo, hi)
    pd = d2[mid]
    pi = idx[mid]
    i = lo - 1
    j = hi
    while True:
        i += 1
        while _less(d2[i], idx[i], pd, pi):
            i += 1
        j -= 1
        while _less(pd, pi, d2[j], idx[j]):
            j -= 1
        if i >= j:
            return j
        _swap(d2, idx, i, j)


@njit(cache=True, nogil=True)
def _sort_range(d2, idx, lo, hi):
    # iterative quicksort with an explicit stack; small runs fall back to
    # insertion sort. Pushing the larger side and iterating on the smaller
    # keeps the stack logarithmic; the depth guard makes overflow impossible
    # regardless of pivot luck (the range is insertion-sorted instead).
    stack = np.empty((128, 2), dtype=np.int64)
    stack[0, 0] = lo
    stack[0, 1] = hi
    sp = 1
    while sp > 0:
        sp -= 1
        lo = stack[sp, 0]
        hi = stack[sp, 1]
        while hi - lo > _INSERTION_CUTOFF:
            if sp == stack.shape[0]:
                break
            j = _hoare_partition(d2, idx, lo, hi)
            if j + 1 - lo < hi - (j + 1):
                stack[sp, 0] = j + 1
                stack[sp, 1] = hi
                sp += 1
                hi = j + 1
            else:
                stack[sp, 0] = lo
                stack[sp, 1] = j + 1
                sp += 1
                lo = j + 1
        _insertion_sort(d2, idx, lo, hi)


@njit(cache=True, nogil=True)
def _partition_k_smallest(d2, idx, lo, hi, k):
    # after the call, positions lo..lo+k-1 hold the k smallest of [lo, hi)
    # (unordered) and everything after is >= all of them
    want = lo + k - 1
    while hi - lo > _INSERTION_CUTOFF:
        j = _hoare_partition(d2, idx, lo, hi)
        if want <= j:
            hi = j + 1
        else:
            lo = j + 1
    _insertion_sort(d2, idx, lo, hi)


def _check_candidates(dist2: np.ndarray, index: np.ndarray, k: int) -> None:
    if dist2.ndim != 1 or index.ndim != 1 or dist2.shape[0] != index.shape[0]:
        raise ValueError("candidate arrays must be 1-D and of equal length")
    if k < 0:
        raise ValueError(f"k must be non-negative, got {k}")
    if k > dist2.shape[0]:
        raise ValueError(
            f"cannot select {k} nearest from {dist2.shape[0]} candidates"
        )


def select_k_fullsort(dist2: np.ndarray, index: np.ndarray, k: int) -> None:
    """Fully sort the candidates ascending by (dist2, index), in place.

    The first ``k`` entries are then the k nearest. Raises if ``k`` exceeds
    the candidate count (the caller must widen its search radius first).
    """
    _check_candidates(dist2, index, k)
    if dist2.shape[0] > 1:
        _sort_range(dist2, index, 0, dist2.shape[0])


def select_k_quickselect(dist2: np.ndarray, index: np.ndarray, k: int) -> None:
    """Partially reorder the candidates so the first ``k`` are the k nearest.

    Entries 0..k-1 all compare <= entry k-1 under (dist2, index); their order
    within the prefix is unspecified. Average linear time.
    """
    _check_candidates(dist2, index, k)
    if k > 0 and dist2.shape[0] > 1:
        _partition_k_smallest(dist2, index, 0, dist2.shape[0], k)
