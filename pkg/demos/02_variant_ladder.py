"""Walk the whole optimization ladder on one workload.

Each preset changes exactly one ingredient relative to the previous one:

    original    locked queue over the full particle list, AoS, branchy, sort
    todo-list   pop only the flagged particles
    lockless    chunked dynamic for loop, no queue lock
    soa         compact structure-of-arrays layout
    vectorised  support test moved inside the kernel call
    optimised   quickselect instead of a full neighbor sort

All six must agree bit for bit; only the timings differ.
"""

import time

from sphlab import (
    PRESETS,
    WorkloadSpec,
    WorkloadKind,
    compute_density_pass,
    density_checksum,
    generate,
    preset_config,
)


def main():
    spec = WorkloadSpec(WorkloadKind.UNIFORM_BOX, n_particles=16384, seed=7)
    k = 128
    base = generate(spec, k_neighbors=k)
    threads = 2

    print(f"workload: {spec.n_particles} uniform particles, K = {k}, "
          f"{threads} threads\n")
    print(f"{'preset':<12} {'t_total':>8} {'search':>8} {'select':>8} "
          f"{'contention':>11}  checksum")

    checksums = set()
    baseline = None
    for name in PRESETS:
        t0 = time.perf_counter()
        densities, stats = compute_density_pass(
            base.copy(), preset_config(name, k_neighbors=k), threads)
        wall = time.perf_counter() - t0
        if baseline is None:
            baseline = wall
        checksum = density_checksum(densities)
        checksums.add(checksum)
        print(f"{name:<12} {wall:>7.3f}s {stats.phase_times['search']:>7.3f}s "
              f"{stats.phase_times['select']:>7.3f}s "
              f"{stats.contention_time:>10.4f}s  {checksum}")

    print(f"\ndistinct checksums: {len(checksums)} (must be 1 -- the ladder "
          "changes performance, never the answer)")
    assert len(checksums) == 1


if __name__ == "__main__":
    main()
