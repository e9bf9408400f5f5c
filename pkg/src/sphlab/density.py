"""Iterative SPH density pass: search, select, interact, repeat.

Each particle's density is a kernel-weighted sum over its K nearest
neighbors, with the smoothing length h set to the distance of the K-th
nearest. Because that distance is not known up front, the pass iterates:
search within the current h, and if fewer than K candidates fall inside,
grow h by 2^(1/3) (doubling the search volume) and flag the particle for
recomputation. The set of flagged particles (the todo list) shrinks
monotonically until empty.

Per particle, the converged result is a pure function of the positions, so
every combination of scheduler, layout, loop style, selector, and thread
count produces bit-identical densities. Two properties make this hold:
candidates are accumulated in one canonical order (ascending squared
distance, particle index as tiebreaker), and the branchy loop's support test
``d2 < h*h`` can only disagree with the in-kernel ``q < 1`` test by terms of
order 1e-126, which vanish against a sum that always contains the O(C/h^3)
self contribution.

The density includes that self term, m_i * W(0, h_i): on a unit lattice it
is what closes the gap between the kernel-interpolated density and the true
1/spacing^3 continuum value.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from time import perf_counter

import numpy as np
from numba import njit

from .kernel import _w_lowered
from .octree import build_octree, _range_query_kernel
from .particles import (
    DEFAULT_SCATTER_FIELDS,
    LayoutKind,
    gather_to_soa,
    scatter_from_soa,
)
from .scheduler import (
    DEFAULT_CHUNK_SIZE,
    SchedulerKind,
    run_dynamic_for,
    run_locked_queue,
    run_todo_list,
)
from .selection import _partition_k_smallest, _sort_range

DEFAULT_K = 295
H_GROWTH = 2.0 ** (1.0 / 3.0)
DEFAULT_MAX_ITERATIONS = 100

PHASE_NAMES = ("tree_build", "search", "select", "interact", "layout")


class LoopStyle(Enum):
    BRANCHY = "branchy"
    BRANCH_LOWERED = "branch-lowered"


class SelectorKind(Enum):
    FULL_SORT = "full-sort"
    QUICK_SELECT = "quick-select"


class ConvergenceError(RuntimeError):
    """The todo list failed to empty within the iteration budget."""


class DegenerateWorkloadError(RuntimeError):
    """A particle's K-th neighbor sits at zero distance (coincident cluster)."""


@dataclass(frozen=True)
class VariantConfig:
    scheduler_kind: SchedulerKind
    layout_kind: LayoutKind
    loop_style: LoopStyle
    selector_kind: SelectorKind
    k_neighbors: int = DEFAULT_K
    chunk_size: int = DEFAULT_CHUNK_SIZE

    def __post_init__(self):
        if self.k_neighbors < 1:
            raise ValueError(f"k_neighbors must be >= 1, got {self.k_neighbors}")
        if self.chunk_size < 1:
            raise ValueError(f"chunk_size must be >= 1, got {self.chunk_size}")

    def replace(self, **kw) -> "VariantConfig":
        from dataclasses import replace

        return replace(self, **kw)


# The optimization ladder, cumulative left to right: fix the scheduler,
# then the layout, then the inner loop, then the selection algorithm.
PRESETS: dict[str, VariantConfig] = {
    "original": VariantConfig(SchedulerKind.LOCKED_QUEUE, LayoutKind.AOS,
                              LoopStyle.BRANCHY, SelectorKind.FULL_SORT),
    "todo-list": VariantConfig(SchedulerKind.TODO_LIST, LayoutKind.AOS,
                               LoopStyle.BRANCHY, SelectorKind.FULL_SORT),
    "lockless": VariantConfig(SchedulerKind.DYNAMIC_FOR, LayoutKind.AOS,
                              LoopStyle.BRANCHY, SelectorKind.FULL_SORT),
    "soa": VariantConfig(SchedulerKind.DYNAMIC_FOR, LayoutKind.SOA,
                         LoopStyle.BRANCHY, SelectorKind.FULL_SORT),
    "vectorised": VariantConfig(SchedulerKind.DYNAMIC_FOR, LayoutKind.SOA,
                                LoopStyle.BRANCH_LOWERED, SelectorKind.FULL_SORT),
    "optimised": VariantConfig(SchedulerKind.DYNAMIC_FOR, LayoutKind.SOA,
                               LoopStyle.BRANCH_LOWERED, SelectorKind.QUICK_SELECT),
}


def preset_config(name: str, **overrides) -> VariantConfig:
    try:
        cfg = PRESETS[name]
    except KeyError:
        known = ", ".join(sorted(PRESETS))
        raise ValueError(f"unknown preset {name!r}; expected one of {known}")
    return cfg.replace(**overrides) if overrides else cfg


@dataclass
class PassStats:
    iteration_count: int
    todo_sizes: np.ndarray
    phase_times: dict[str, float]
    contention_time: float
    items_per_worker: np.ndarray  # shape (iterations, workers)
    skipped_items: int = 0
    t_total: float = 0.0


def initial_smoothing_length(box_side: float, n_particles: int, k: int) -> float:
    """Radius that encloses k particles at uniform density in a box of side L."""
    if n_particles < 1 or k < 1 or box_side <= 0.0:
        raise ValueError("need box_side > 0, n_particles >= 1, k >= 1")
    return box_side * (3.0 * k / (4.0 * math.pi * n_particles)) ** (1.0 / 3.0)


def adjust_smoothing_length(smoothing_length: float, found_count: int, k: int,
                            kth_distance: float | None = None) -> tuple[float, bool]:
    """One smoothing-length update step.

    Too few candidates in range: grow h by 2^(1/3) and flag the particle for
    another round. Otherwise h snaps to the K-th neighbor distance and the
    flag clears. Returns (new h, needs_recompute).
    """
    if found_count < 0:
        raise ValueError(f"found_count must be >= 0, got {found_count}")
    if found_count < k:
        return smoothing_length * H_GROWTH, True
    if kth_distance is None:
        raise ValueError("kth_distance is required when found_count >= k")
    return float(kth_distance), False


@njit(cache=True, nogil=True)
def _neighbor_sum(lo, hi, branch_lowered, h, cand_idx, cand_d2, mass):
    rho = 0.0
    if branch_lowered:
        for n in range(lo, hi):
            rho += mass[cand_idx[n]] * _w_lowered(math.sqrt(cand_d2[n]), h)
    else:
        h2 = h * h
        for n in range(lo, hi):
            if cand_d2[n] < h2:
                rho += mass[cand_idx[n]] * _w_lowered(math.sqrt(cand_d2[n]), h)
    return rho


def density_interact(masses: np.ndarray, smoothing_length: float,
                     neighbor_dist2: np.ndarray, neighbor_index: np.ndarray,
                     loop_style: LoopStyle = LoopStyle.BRANCHY) -> float:
    """Sum m_j * W(r_ij, h) over a neighbor candidate list, in list order.

    The branchy style tests the support radius before each kernel call; the
    branch-lowered style calls unconditionally and lets the kernel return
    zero outside support. Both give the same sum. An empty list gives 0.
    """
    d2 = np.ascontiguousarray(neighbor_dist2, dtype=np.float64)
    idx = np.ascontiguousarray(neighbor_index, dtype=np.int64)
    if d2.shape != idx.shape or d2.ndim != 1:
        raise ValueError("neighbor arrays must be 1-D and of equal length")
    m = np.ascontiguousarray(masses, dtype=np.float64)
    return float(_neighbor_sum(0, d2.shape[0],
                               loop_style is LoopStyle.BRANCH_LOWERED,
                               float(smoothing_length), idx, d2, m))


@njit(cache=True, nogil=True)
def _search_batch(items, x, y, z, h, centers, halfs, child, start, end, perm,
                  pad, cand_idx, cand_d2, cand_off, stack):
    # Fills the flat candidate buffer; cand_off[t]..cand_off[t+1] is item t's
    # slice. Returns total candidates, or the query kernel's negative code
    # when a buffer is too small.
    total = 0
    cand_off[0] = 0
    for t in range(items.shape[0]):
        i = items[t]
        cnt = _range_query_kernel(
            centers, halfs, child, start, end, perm,
            x, y, z, x[i], y[i], z[i], h[i], pad, i,
            cand_idx[total:], cand_d2[total:], stack,
        )
        if cnt < 0:
            return cnt
        total += cnt
        cand_off[t + 1] = total
    return total


@njit(cache=True, nogil=True)
def _select_batch(items, k, quickselect, growth, h, flags,
                  cand_idx, cand_d2, cand_off, sel_n):
    # Chooses each item's K nearest in canonical (dist2, index) order and
    # applies the smoothing-length update. Returns the first particle whose
    # K-th neighbor distance is zero (irreparably coincident), or -1.
    bad = np.int64(-1)
    for t in range(items.shape[0]):
        i = items[t]
        lo = cand_off[t]
        hi = cand_off[t + 1]
        if hi - lo < k:
            h[i] = h[i] * growth
            flags[i] = 1
            sel_n[t] = 0
        else:
            if quickselect:
                _partition_k_smallest(cand_d2, cand_idx, lo, hi, k)
                _sort_range(cand_d2, cand_idx, lo, lo + k)
            else:
                _sort_range(cand_d2, cand_idx, lo, hi)
            hk = math.sqrt(cand_d2[lo + k - 1])
            if hk <= 0.0:
                flags[i] = 1
                sel_n[t] = 0
                if bad < 0:
                    bad = i
            else:
                h[i] = hk
                flags[i] = 0
                sel_n[t] = k
    return bad


@njit(cache=True, nogil=True)
def _interact_batch(items, branch_lowered, mass, h, density,
                    cand_idx, cand_d2, cand_off, sel_n):
    for t in range(items.shape[0]):
        if sel_n[t] == 0:
            continue
        i = items[t]
        hi_h = h[i]
        lo = cand_off[t]
        rho = mass[i] * _w_lowered(0.0, hi_h)
        rho += _neighbor_sum(lo, lo + sel_n[t], branch_lowered,
                             hi_h, cand_idx, cand_d2, mass)
        density[i] = rho


class _WorkerScratch:
    """Private per-worker buffers: candidates, offsets, traversal stack."""

    def __init__(self, chunk_size: int, cand_capacity: int = 8192):
        self.cand_idx = np.empty(cand_capacity, dtype=np.int64)
        self.cand_d2 = np.empty(cand_capacity, dtype=np.float64)
        self.cand_off = np.empty(chunk_size + 1, dtype=np.int64)
        self.sel_n = np.empty(chunk_size, dtype=np.int64)
        self.stack = np.empty(4096, dtype=np.int64)
        self.t_search = 0.0
        self.t_select = 0.0
        self.t_interact = 0.0

    def grow_candidates(self) -> None:
        cap = 2 * self.cand_idx.shape[0]
        self.cand_idx = np.empty(cap, dtype=np.int64)
        self.cand_d2 = np.empty(cap, dtype=np.float64)

    def grow_stack(self) -> None:
        self.stack = np.empty(2 * self.stack.shape[0], dtype=np.int64)


def compute_density_pass(particles: np.ndarray, config: VariantConfig,
                         thread_count: int = 1,
                         max_iterations: int = DEFAULT_MAX_ITERATIONS,
                         ) -> tuple[np.ndarray, PassStats]:
    """Run the full iterative density computation over an AoS workload.

    Positions and masses are read-only; smoothing_length, density, and
    needs_recompute are (re)computed from scratch and written back. Worker
    errors abort the pass only after the current parallel region completes.
    Returns (densities, PassStats).
    """
    n = particles.shape[0]
    if n == 0:
        raise ValueError("workload must contain at least one particle")
    if thread_count < 1:
        raise ValueError(f"thread_count must be >= 1, got {thread_count}")

    t_pass0 = perf_counter()
    phase = dict.fromkeys(PHASE_NAMES, 0.0)

    if config.layout_kind is LayoutKind.SOA:
        t0 = perf_counter()
        soa = gather_to_soa(particles)
        phase["layout"] += perf_counter() - t0
        x, y, z = soa.x, soa.y, soa.z
        mass, h = soa.mass, soa.smoothing_length
        density, flags = soa.density, soa.needs_recompute
    else:
        soa = None
        x, y, z = particles["x"], particles["y"], particles["z"]
        mass, h = particles["mass"], particles["smoothing_length"]
        density = particles["density"]
        flags = particles["needs_recompute"]

    flags[:] = 1

    t0 = perf_counter()
    tree = build_octree((x, y, z), leaf_capacity=8)
    phase["tree_build"] += perf_counter() - t0

    k = config.k_neighbors
    quickselect = config.selector_kind is SelectorKind.QUICK_SELECT
    lowered = config.loop_style is LoopStyle.BRANCH_LOWERED
    scratch = [_WorkerScratch(config.chunk_size) for _ in range(thread_count)]
    tc, th = tree.node_center, tree.node_half
    tch, ts, te = tree.node_child, tree.node_start, tree.node_end
    perm, pad = tree.particle_perm, tree.query_pad

    def work(wid: int, items: np.ndarray) -> None:
        ws = scratch[wid]
        t0 = perf_counter()
        while True:
            r = _search_batch(items, x, y, z, h, tc, th, tch, ts, te, perm,
                              pad, ws.cand_idx, ws.cand_d2, ws.cand_off,
                              ws.stack)
            if r == -1:
                ws.grow_candidates()
            elif r == -2:
                ws.grow_stack()
            else:
                break
        t1 = perf_counter()
        bad = _select_batch(items, k, quickselect, H_GROWTH, h, flags,
                            ws.cand_idx, ws.cand_d2, ws.cand_off, ws.sel_n)
        t2 = perf_counter()
        ws.t_search += t1 - t0
        ws.t_select += t2 - t1
        if bad >= 0:
            raise DegenerateWorkloadError(
                f"particle {bad}: {k}-th nearest neighbour is at zero "
                f"distance; >= {k + 1} coincident particles"
            )
        _interact_batch(items, lowered, mass, h, density,
                        ws.cand_idx, ws.cand_d2, ws.cand_off, ws.sel_n)
        ws.t_interact += perf_counter() - t2

    def must_compute(i: int) -> bool:
        return flags[i] != 0

    all_items = np.arange(n, dtype=np.int64)
    todo = all_items
    todo_sizes: list[int] = []
    items_per_worker: list[np.ndarray] = []
    contention = 0.0
    skipped = 0
    iteration = 0

    while todo.size:
        iteration += 1
        if iteration > max_iterations:
            raise ConvergenceError(
                f"{todo.size} of {n} particles still flagged after "
                f"{max_iterations} iterations"
            )
        todo_sizes.append(int(todo.size))
        kind = config.scheduler_kind
        if kind is SchedulerKind.LOCKED_QUEUE:
            st = run_locked_queue(all_items, must_compute, work, thread_count)
        elif kind is SchedulerKind.TODO_LIST:
            st = run_todo_list(todo, work, thread_count)
        else:
            st = run_dynamic_for(todo, work, thread_count, config.chunk_size)
        contention += st.contention_time
        skipped += st.skipped_items
        items_per_worker.append(st.items_per_worker)
        todo = todo[flags[todo] != 0]

    if soa is not None:
        t0 = perf_counter()
        scatter_from_soa(soa, particles, DEFAULT_SCATTER_FIELDS)
        phase["layout"] += perf_counter() - t0

    phase["search"] = sum(ws.t_search for ws in scratch)
    phase["select"] = sum(ws.t_select for ws in scratch)
    phase["interact"] = sum(ws.t_interact for ws in scratch)

    stats = PassStats(
        iteration_count=iteration,
        todo_sizes=np.array(todo_sizes, dtype=np.int64),
        phase_times=phase,
        contention_time=contention,
        items_per_worker=(np.array(items_per_worker, dtype=np.int64)
                          if items_per_worker
                          else np.zeros((0, thread_count), dtype=np.int64)),
        skipped_items=skipped,
        t_total=perf_counter() - t_pass0,
    )
    return np.array(particles["density"], dtype=np.float64), stats
