"""Benchmark records, CSV schema, and speedup/efficiency arithmetic.

Every benchmark row carries a checksum of the density array it produced.
Rows measured on the same workload and K must agree bit-for-bit; a sweep
with diverging checksums is measuring two different computations and is
rejected outright.

Report arithmetic: speedup is t_baseline / t_row on the same workload;
parallel efficiency divides a row's speedup over its own variant's
one-thread time by the thread count; vectorization speedup S_v is the
scalar-loop time over the vector-loop time, and its efficiency is S_v
divided by the vector length.
"""

from __future__ import annotations

import csv
import os
import statistics
from dataclasses import dataclass, fields
from typing import Iterable, Sequence

import numpy as np

from .density import (
    DEFAULT_MAX_ITERATIONS,
    PassStats,
    VariantConfig,
    compute_density_pass,
)
from .snapshot import checksum64, encode_array

CSV_COLUMNS = (
    "variant", "threads", "n_particles", "k", "repeat", "iterations",
    "t_total_s", "t_tree_s", "t_search_s", "t_select_s", "t_interact_s",
    "t_layout_s", "t_contention_s", "checksum_hex",
)


class NondeterminismError(RuntimeError):
    """Repeats of one configuration produced different density checksums."""


class MissingBaselineError(ValueError):
    """The requested baseline row is absent from the benchmark CSV."""


def density_checksum(densities: np.ndarray) -> str:
    """Checksum of the raw little-endian density bytes, as 16 hex digits."""
    return f"{checksum64(encode_array(densities)):016x}"


@dataclass
class BenchRecord:
    variant: str
    threads: int
    n_particles: int
    k: int
    repeat: int
    iterations: int
    t_total_s: float
    t_tree_s: float
    t_search_s: float
    t_select_s: float
    t_interact_s: float
    t_layout_s: float
    t_contention_s: float
    checksum_hex: str

    @classmethod
    def from_pass(cls, variant: str, threads: int, repeat: int,
                  n_particles: int, k: int, densities: np.ndarray,
                  stats: PassStats) -> "BenchRecord":
        return cls(
            variant=variant, threads=threads, n_particles=n_particles, k=k,
            repeat=repeat, iterations=stats.iteration_count,
            t_total_s=stats.t_total,
            t_tree_s=stats.phase_times["tree_build"],
            t_search_s=stats.phase_times["search"],
            t_select_s=stats.phase_times["select"],
            t_interact_s=stats.phase_times["interact"],
            t_layout_s=stats.phase_times["layout"],
            t_contention_s=stats.contention_time,
            checksum_hex=density_checksum(densities),
        )

    def as_row(self) -> list[str]:
        out = []
        for f in fields(self):
            v = getattr(self, f.name)
            out.append(f"{v:.9e}" if isinstance(v, float) else str(v))
        return out

    @classmethod
    def from_row(cls, row: dict[str, str]) -> "BenchRecord":
        kw = {}
        for f in fields(cls):
            raw = row[f.name]
            if f.type in ("int", int):
                kw[f.name] = int(raw)
            elif f.type in ("float", float):
                kw[f.name] = float(raw)
            else:
                kw[f.name] = raw
        return cls(**kw)


def append_records(path, records: Iterable[BenchRecord]) -> None:
    """Append rows to the CSV, writing the header on first touch."""
    fresh = not os.path.exists(path) or os.path.getsize(path) == 0
    with open(path, "a", newline="") as f:
        w = csv.writer(f)
        if fresh:
            w.writerow(CSV_COLUMNS)
        for r in records:
            w.writerow(r.as_row())


def read_records(path) -> list[BenchRecord]:
    with open(path, newline="") as f:
        reader = csv.DictReader(f)
        missing = set(CSV_COLUMNS) - set(reader.fieldnames or ())
        if missing:
            raise ValueError(f"CSV {path!r} lacks columns: {sorted(missing)}")
        return [BenchRecord.from_row(row) for row in reader]


def run_benchmark(particles: np.ndarray, config: VariantConfig, variant: str,
                  thread_count: int, repeats: int = 1,
                  max_iterations: int = DEFAULT_MAX_ITERATIONS,
                  ) -> tuple[list[BenchRecord], np.ndarray]:
    """Run one variant `repeats` times on pristine copies of the workload.

    Repeats run sequentially; each starts from an untouched copy so the
    smoothing-length iteration count is comparable. Diverging checksums
    between repeats are a hard failure.
    """
    if repeats < 1:
        raise ValueError(f"repeats must be >= 1, got {repeats}")
    records: list[BenchRecord] = []
    densities = None
    for rep in range(repeats):
        work = particles.copy()
        densities, stats = compute_density_pass(work, config, thread_count,
                                                max_iterations)
        records.append(BenchRecord.from_pass(
            variant, thread_count, rep, particles.shape[0],
            config.k_neighbors, densities, stats,
        ))
    first = records[0].checksum_hex
    for r in records[1:]:
        if r.checksum_hex != first:
            raise NondeterminismError(
                f"variant {variant!r} at {thread_count} threads: repeat "
                f"{r.repeat} checksum {r.checksum_hex} != repeat 0 {first}"
            )
    return records, densities


@dataclass(frozen=True)
class VectorMetrics:
    s_v: float
    efficiency: float
    vector_length: int


def vector_metrics(t_scalar: float, t_vector: float, vector_length: int,
                   ) -> VectorMetrics:
    """S_v = t_scalar / t_vector and efficiency = S_v / VL."""
    if t_scalar <= 0.0 or t_vector <= 0.0:
        raise ValueError("loop timings must both be positive")
    if vector_length < 1:
        raise ValueError(f"vector_length must be >= 1, got {vector_length}")
    s_v = t_scalar / t_vector
    return VectorMetrics(s_v=s_v, efficiency=s_v / vector_length,
                         vector_length=vector_length)


@dataclass
class ReportRow:
    variant: str
    threads: int
    n_particles: int
    k: int
    repeats: int
    t_median_s: float
    speedup: float
    efficiency: float | None


def build_report(records: Sequence[BenchRecord], baseline_variant: str,
                 baseline_threads: int = 1) -> list[ReportRow]:
    """Median-aggregate rows and normalize to the baseline of each workload.

    Rows are grouped by (variant, threads, n_particles, k); speedups compare
    only rows that share (n_particles, k). Parallel efficiency uses the
    row's own variant at one thread when that row exists.
    """
    groups: dict[tuple, list[BenchRecord]] = {}
    for r in records:
        groups.setdefault((r.variant, r.threads, r.n_particles, r.k),
                          []).append(r)
    medians = {
        key: statistics.median(r.t_total_s for r in rows)
        for key, rows in groups.items()
    }

    workloads = sorted({(n, k) for _, _, n, k in groups})
    out: list[ReportRow] = []
    for n, k in workloads:
        base_key = (baseline_variant, baseline_threads, n, k)
        if base_key not in medians:
            raise MissingBaselineError(
                f"no rows for baseline variant={baseline_variant!r} "
                f"threads={baseline_threads} on workload n={n} k={k}"
            )
        t_base = medians[base_key]
        for key in sorted(medians):
            variant, threads, kn, kk = key
            if (kn, kk) != (n, k):
                continue
            t_row = medians[key]
            one_thread = medians.get((variant, 1, n, k))
            eff = (one_thread / t_row / threads) if one_thread else None
            out.append(ReportRow(
                variant=variant, threads=threads, n_particles=n, k=k,
                repeats=len(groups[key]), t_median_s=t_row,
                speedup=t_base / t_row, efficiency=eff,
            ))
    return out


def format_report_markdown(rows: Sequence[ReportRow],
                           vector: VectorMetrics | None = None) -> str:
    lines = [
        "| variant | threads | n | k | repeats | t_median_s | speedup | efficiency |",
        "|---|---|---|---|---|---|---|---|",
    ]
    for r in rows:
        eff = f"{r.efficiency:.3f}" if r.efficiency is not None else "-"
        lines.append(
            f"| {r.variant} | {r.threads} | {r.n_particles} | {r.k} "
            f"| {r.repeats} | {r.t_median_s:.6f} | {r.speedup:.3f} | {eff} |"
        )
    if vector is not None:
        lines.append("")
        lines.append(
            f"vectorization: S_v = {vector.s_v:.6g}, "
            f"efficiency = {vector.efficiency:.6g} "
            f"(VL = {vector.vector_length})"
        )
    return "\n".join(lines)


def format_report_csv(rows: Sequence[ReportRow],
                      vector: VectorMetrics | None = None) -> str:
    out = ["variant,threads,n_particles,k,repeats,t_median_s,speedup,efficiency"]
    for r in rows:
        eff = f"{r.efficiency:.9e}" if r.efficiency is not None else ""
        out.append(
            f"{r.variant},{r.threads},{r.n_particles},{r.k},{r.repeats},"
            f"{r.t_median_s:.9e},{r.speedup:.9e},{eff}"
        )
    if vector is not None:
        out.append(f"s_v,{vector.s_v:.9e}")
        out.append(f"vector_efficiency,{vector.efficiency:.9e}")
    return "\n".join(out)
