"""Full sort vs quickselect for picking the K nearest candidates.

The density pass only needs the K smallest (distance, index) pairs and the
K-th distance itself; sorting the whole candidate list does strictly more
work. Quickselect partitions until position K-1 is correct, in average
linear time.
"""

import time

import numpy as np

from sphlab import select_k_fullsort, select_k_quickselect


def main():
    rng = np.random.default_rng(1)
    k = 295

    # one list, inspected closely
    d2 = rng.random(800)
    idx = np.arange(800, dtype=np.int64)
    a_d2, a_idx = d2.copy(), idx.copy()
    b_d2, b_idx = d2.copy(), idx.copy()
    select_k_fullsort(a_d2, a_idx, k)
    select_k_quickselect(b_d2, b_idx, k)
    same_prefix_set = set(zip(a_d2[:k], a_idx[:k])) == set(zip(b_d2[:k], b_idx[:k]))
    print(f"one list of 800: identical first-{k} set: {same_prefix_set}, "
          f"identical K-th distance: {a_d2[k-1] == sorted(b_d2[:k])[-1]}")
    fully_sorted = bool(np.all(np.diff(a_d2) >= 0))
    print(f"full sort left the whole list ordered: {fully_sorted} "
          "(quickselect deliberately does not)")

    # many lists, timed; both run through the same compiled machinery
    lists = [
        (rng.random(int(rng.integers(500, 1001))),) for _ in range(20_000)
    ]
    lists = [(d, np.arange(d.shape[0], dtype=np.int64)) for (d,) in lists]

    for name, select in (("full sort", select_k_fullsort),
                         ("quickselect", select_k_quickselect)):
        copies = [(d.copy(), i.copy()) for d, i in lists]
        t0 = time.perf_counter()
        for d, i in copies:
            select(d, i, k)
        dt = time.perf_counter() - t0
        print(f"{name:<12} {len(copies)} lists of 500-1000: {dt:.3f} s")


if __name__ == "__main__":
    main()
