"""Work-sharing engines that distribute per-particle items to worker threads.

Three interchangeable strategies, from pathological to scalable:

* ``run_locked_queue`` pops every index of the FULL particle list one at a
  time inside a mutex, then tests whether the item needs computing at all.
  When only a small fraction does, workers spend their time locking and
  unlocking for items they immediately discard. The inefficiency is the
  point: this engine exists to be measured against.
* ``run_todo_list`` uses the same mutex-guarded pop but over a prefiltered
  list that contains only items needing computation, so nothing is skipped.
* ``run_dynamic_for`` hands out chunks through a single shared monotonically
  increasing cursor with no mutual-exclusion region around the handoff, like
  a dynamically scheduled parallel for loop.

Contention time is the wall time between requesting and obtaining the next
queue position, summed over workers. Worker errors set a shared flag; the
remaining items are drained (locked engines) or the failing worker exits
early (dynamic engine), and the first error is re-raised only after all
workers have finished, never mid-region.

The work callback must tolerate concurrent invocation on distinct items.
It receives ``(worker_id, item_array)`` where ``item_array`` is a view into
the engine's item list: a single element from the queue engines, up to
``chunk_size`` elements from the dynamic engine.
"""

from __future__ import annotations

import itertools
import threading
from dataclasses import dataclass
from enum import Enum
from time import perf_counter
from typing import Callable

import numpy as np

DEFAULT_CHUNK_SIZE = 16


class SchedulerKind(Enum):
    LOCKED_QUEUE = "locked-queue"
    TODO_LIST = "todo-list"
    DYNAMIC_FOR = "dynamic-for"


@dataclass
class ScheduleStats:
    """Per-region accounting returned by every engine."""

    contention_time: float
    items_per_worker: np.ndarray
    skipped_items: int = 0

    @property
    def items_processed(self) -> int:
        return int(self.items_per_worker.sum())


class _Region:
    """Shared state for one parallel region."""

    def __init__(self, workers: int):
        self.error: BaseException | None = None
        self.error_lock = threading.Lock()
        self.failed = threading.Event()
        self.contention = np.zeros(workers, dtype=np.float64)
        self.done = np.zeros(workers, dtype=np.int64)
        self.skipped = np.zeros(workers, dtype=np.int64)

    def record_error(self, exc: BaseException) -> None:
        with self.error_lock:
            if self.error is None:
                self.error = exc
        self.failed.set()


def _as_items(items) -> np.ndarray:
    arr = np.ascontiguousarray(items, dtype=np.int64)
    if arr.ndim != 1:
        raise ValueError("items must be a 1-D index sequence")
    return arr


def _launch(workers: int, body: Callable[[int], None],
            region: _Region) -> None:
    def runner(wid: int) -> None:
        try:
            body(wid)
        except BaseException as exc:
            region.record_error(exc)

    threads = [
        threading.Thread(target=runner, args=(w,), name=f"sphlab-worker-{w}")
        for w in range(workers)
    ]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    if region.error is not None:
        raise region.error


def run_locked_queue(items, must_compute: Callable[[int], bool],
                     work: Callable[[int, np.ndarray], None],
                     workers: int = 1) -> ScheduleStats:
    """Pop the full list under a mutex, test, then compute or skip."""
    if workers < 1:
        raise ValueError(f"workers must be >= 1, got {workers}")
    arr = _as_items(items)
    n = arr.shape[0]
    region = _Region(workers)
    lock = threading.Lock()
    cursor = [0]

    def body(wid: int) -> None:
        contention = 0.0
        done = 0
        skipped = 0
        try:
            while True:
                t0 = perf_counter()
                lock.acquire()
                contention += perf_counter() - t0
                i = cursor[0]
                if i < n:
                    cursor[0] = i + 1
                lock.release()
                if i >= n:
                    break
                if region.failed.is_set():
                    continue  # drain the queue without processing
                if must_compute(int(arr[i])):
                    try:
                        work(wid, arr[i:i + 1])
                    except BaseException as exc:
                        region.record_error(exc)
                        continue
                    done += 1
                else:
                    skipped += 1
        finally:
            region.contention[wid] = contention
            region.done[wid] = done
            region.skipped[wid] = skipped

    _launch(workers, body, region)
    return ScheduleStats(
        contention_time=float(region.contention.sum()),
        items_per_worker=region.done.copy(),
        skipped_items=int(region.skipped.sum()),
    )


def run_todo_list(items, work: Callable[[int, np.ndarray], None],
                  workers: int = 1) -> ScheduleStats:
    """Mutex-guarded pop over a prefiltered list; every item is computed."""
    if workers < 1:
        raise ValueError(f"workers must be >= 1, got {workers}")
    arr = _as_items(items)
    n = arr.shape[0]
    region = _Region(workers)
    lock = threading.Lock()
    cursor = [0]

    def body(wid: int) -> None:
        contention = 0.0
        done = 0
        try:
            while True:
                t0 = perf_counter()
                lock.acquire()
                contention += perf_counter() - t0
                i = cursor[0]
                if i < n:
                    cursor[0] = i + 1
                lock.release()
                if i >= n:
                    break
                if region.failed.is_set():
                    continue
                try:
                    work(wid, arr[i:i + 1])
                except BaseException as exc:
                    region.record_error(exc)
                    continue
                done += 1
        finally:
            region.contention[wid] = contention
            region.done[wid] = done

    _launch(workers, body, region)
    return ScheduleStats(
        contention_time=float(region.contention.sum()),
        items_per_worker=region.done.copy(),
    )


def run_dynamic_for(items, work: Callable[[int, np.ndarray], None],
                    workers: int = 1,
                    chunk_size: int = DEFAULT_CHUNK_SIZE) -> ScheduleStats:
    """Claim chunks through one shared cursor; no lock around the handoff.

    A worker that fails stops claiming; the others run to completion and the
    error surfaces only after the region, so partial progress is never acted
    on mid-loop.
    """
    if workers < 1:
        raise ValueError(f"workers must be >= 1, got {workers}")
    if chunk_size < 1:
        raise ValueError(f"chunk_size must be >= 1, got {chunk_size}")
    arr = _as_items(items)
    n = arr.shape[0]
    region = _Region(workers)
    claim = itertools.count()  # next() is atomic: the shared cursor

    def body(wid: int) -> None:
        contention = 0.0
        done = 0
        try:
            while True:
                t0 = perf_counter()
                start = next(claim) * chunk_size
                contention += perf_counter() - t0
                if start >= n:
                    break
                stop = min(start + chunk_size, n)
                work(wid, arr[start:stop])
                done += stop - start
        finally:
            region.contention[wid] = contention
            region.done[wid] = done

    _launch(workers, body, region)
    return ScheduleStats(
        contention_time=float(region.contention.sum()),
        items_per_worker=region.done.copy(),
    )
