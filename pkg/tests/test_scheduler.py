import threading
import time

import numpy as np
import pytest

from sphlab import (
    DEFAULT_CHUNK_SIZE,
    SchedulerKind,
    run_dynamic_for,
    run_locked_queue,
    run_todo_list,
)


class _Log:
    """Thread-safe record of every item each worker processed."""

    def __init__(self):
        self.lock = threading.Lock()
        self.items = []
        self.by_worker = {}

    def work(self, worker_id, item_array):
        got = [int(v) for v in item_array]
        with self.lock:
            self.items.extend(got)
            self.by_worker.setdefault(worker_id, []).extend(got)


def test_locked_queue_all_items_computed():
    log = _Log()
    stats = run_locked_queue(np.arange(100), lambda i: True, log.work,
                             workers=1)
    assert sorted(log.items) == list(range(100))
    assert stats.items_processed == 100
    assert stats.skipped_items == 0
    assert stats.contention_time >= 0.0


def test_locked_queue_skips_unflagged_items():
    flags = np.zeros(100, dtype=bool)
    flags[[3, 40, 99]] = True
    log = _Log()
    stats = run_locked_queue(np.arange(100), lambda i: flags[i], log.work,
                             workers=4)
    assert sorted(log.items) == [3, 40, 99]
    assert stats.items_processed == 3
    assert stats.skipped_items == 97


def test_todo_list_computes_exactly_the_given_items():
    todo = np.array([5, 17, 2, 88, 41])
    log = _Log()
    stats = run_todo_list(todo, log.work, workers=3)
    assert sorted(log.items) == sorted(todo.tolist())
    assert stats.items_processed == 5
    assert stats.skipped_items == 0
    assert stats.items_per_worker.shape == (3,)


def test_prefiltered_todo_equals_locked_queue_with_predicate():
    rng = np.random.default_rng(0)
    flags = rng.random(500) < 0.3
    all_items = np.arange(500)
    a, b = _Log(), _Log()
    run_locked_queue(all_items, lambda i: flags[i], a.work, workers=4)
    run_todo_list(all_items[flags], b.work, workers=4)
    assert sorted(a.items) == sorted(b.items)


def test_dynamic_for_exactly_once():
    rng = np.random.default_rng(1)
    for trial in range(20):
        n = int(rng.integers(0, 300))
        chunk = int(rng.integers(1, 40))
        workers = int(rng.integers(1, 9))
        items = rng.permutation(n)
        log = _Log()
        stats = run_dynamic_for(items, log.work, workers=workers,
                                chunk_size=chunk)
        assert sorted(log.items) == sorted(items.tolist()), trial
        assert stats.items_processed == n
        assert stats.items_per_worker.shape == (workers,)


def test_dynamic_for_single_worker_preserves_order():
    log = _Log()
    run_dynamic_for(np.arange(50), log.work, workers=1, chunk_size=7)
    assert log.items == list(range(50))
    # chunks arrive in claim order with the configured width
    assert [len(v) for v in _chunks_of(log.by_worker[0], 7)] == [7] * 7 + [1]


def _chunks_of(seq, width):
    return [seq[i:i + width] for i in range(0, len(seq), width)]


def test_engines_exactly_once_under_concurrency():
    # many trials across engines and worker counts; each item must be
    # processed exactly once, by exactly one worker
    rng = np.random.default_rng(2)
    for trial in range(60):
        n = int(rng.integers(1, 400))
        workers = int(rng.choice([1, 2, 3, 4, 8]))
        items = rng.permutation(n)
        runs = (
            lambda log: run_locked_queue(items, lambda i: True, log.work,
                                         workers=workers),
            lambda log: run_todo_list(items, log.work, workers=workers),
            lambda log: run_dynamic_for(items, log.work, workers=workers),
        )
        for run in runs:
            log = _Log()
            run(log)
            assert sorted(log.items) == list(range(n)), trial
            assert sum(len(v) for v in log.by_worker.values()) == n


class _Boom(RuntimeError):
    pass


def _failing_work(fail_on):
    def work(worker_id, item_array):
        for v in item_array:
            if int(v) == fail_on:
                raise _Boom(f"item {int(v)}")
    return work


def test_locked_queue_error_propagates_after_drain():
    with pytest.raises(_Boom, match="item 10"):
        run_locked_queue(np.arange(100), lambda i: True, _failing_work(10),
                         workers=2)


def test_todo_list_error_propagates_after_drain():
    log = _Log()

    def work(worker_id, item_array):
        log.work(worker_id, item_array)
        if int(item_array[0]) == 7:
            raise _Boom("boom")

    with pytest.raises(_Boom):
        run_todo_list(np.arange(50), work, workers=3)
    # remaining items were drained, not computed
    assert len(log.items) < 50


def test_dynamic_for_error_lets_other_workers_finish():
    done = []
    lock = threading.Lock()

    def work(worker_id, item_array):
        if int(item_array[0]) == 0:
            raise _Boom("first chunk")
        time.sleep(0.001)
        with lock:
            done.extend(int(v) for v in item_array)

    with pytest.raises(_Boom):
        run_dynamic_for(np.arange(64), work, workers=4, chunk_size=4)
    # the failing worker claimed chunk [0..3]; every other chunk completes
    assert sorted(done) == list(range(4, 64))


def test_first_error_wins():
    def work(worker_id, item_array):
        raise _Boom(f"worker {worker_id}")

    with pytest.raises(_Boom):
        run_todo_list(np.arange(10), work, workers=4)


def test_empty_inputs():
    log = _Log()
    for stats in (
        run_locked_queue(np.array([], dtype=np.int64), lambda i: True,
                         log.work, workers=2),
        run_todo_list(np.array([], dtype=np.int64), log.work, workers=2),
        run_dynamic_for(np.array([], dtype=np.int64), log.work, workers=2),
    ):
        assert stats.items_processed == 0
        assert stats.contention_time >= 0.0
    assert log.items == []


def test_validation():
    with pytest.raises(ValueError):
        run_locked_queue(np.arange(3), lambda i: True, lambda w, a: None,
                         workers=0)
    with pytest.raises(ValueError):
        run_todo_list(np.arange(3), lambda w, a: None, workers=-1)
    with pytest.raises(ValueError):
        run_dynamic_for(np.arange(3), lambda w, a: None, workers=1,
                        chunk_size=0)


def test_dynamic_for_balances_one_expensive_item():
    # one item costs ~100x the rest; dynamic chunking must keep total wall
    # time comparable to the uniform-cost run on the same item set
    n = 4000
    uniform = np.full(n, 40_000, dtype=np.int64)
    skewed = uniform.copy()
    skewed[n // 2] = 4_000_000

    def spin(worker_id, item_array):
        for v in item_array:
            acc = 0
            for i in range(int(v) // 1000):
                acc += i
    t0 = time.perf_counter()
    run_dynamic_for(uniform, spin, workers=4, chunk_size=16)
    t_uniform = time.perf_counter() - t0
    t0 = time.perf_counter()
    run_dynamic_for(skewed, spin, workers=4, chunk_size=16)
    t_skewed = time.perf_counter() - t0
    assert t_skewed <= 2.5 * t_uniform + 0.25


def test_scheduler_kind_values():
    assert SchedulerKind.LOCKED_QUEUE.value == "locked-queue"
    assert SchedulerKind.TODO_LIST.value == "todo-list"
    assert SchedulerKind.DYNAMIC_FOR.value == "dynamic-for"
    assert DEFAULT_CHUNK_SIZE == 16
