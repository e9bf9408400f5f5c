"""SPH density kernel laboratory.

An isolated smoothed-particle-hydrodynamics density computation and the
ladder of optimizations that takes it from a lock-bound baseline to a
scalable, compact-layout, selection-optimized variant, with deterministic
workloads, checksummed snapshots, and a benchmark CLI for measuring each
step.
"""

from .bench import (
    CSV_COLUMNS,
    BenchRecord,
    MissingBaselineError,
    NondeterminismError,
    ReportRow,
    VectorMetrics,
    append_records,
    build_report,
    density_checksum,
    format_report_csv,
    format_report_markdown,
    read_records,
    run_benchmark,
    vector_metrics,
)
from .density import (
    DEFAULT_K,
    DEFAULT_MAX_ITERATIONS,
    H_GROWTH,
    PRESETS,
    ConvergenceError,
    DegenerateWorkloadError,
    LoopStyle,
    PassStats,
    SelectorKind,
    VariantConfig,
    adjust_smoothing_length,
    compute_density_pass,
    density_interact,
    initial_smoothing_length,
    preset_config,
)
from .kernel import WENDLAND_C6_NORM, KernelKind, KernelSpec, kernel_w
from .octree import (
    DEFAULT_LEAF_CAPACITY,
    Octree,
    QueryWorkspace,
    TreeNode,
    build_octree,
    range_query,
    validate_tree,
)
from .particles import (
    DEFAULT_AOS_RECORD_BYTES,
    DEFAULT_SCATTER_FIELDS,
    LIVE_RECORD_BYTES,
    SOA_MAX_BYTES_PER_PARTICLE,
    LayoutConfig,
    LayoutKind,
    ParticleSoA,
    aos_dtype,
    gather_to_soa,
    new_particle_array,
    scatter_from_soa,
)
from .scheduler import (
    DEFAULT_CHUNK_SIZE,
    ScheduleStats,
    SchedulerKind,
    run_dynamic_for,
    run_locked_queue,
    run_todo_list,
)
from .selection import (
    NeighborCandidate,
    select_k_fullsort,
    select_k_quickselect,
)
from .snapshot import (
    BadMagicError,
    ChecksumError,
    SnapshotError,
    SnapshotIOError,
    TruncatedError,
    VersionError,
    checksum64,
    decode_array,
    decode_particles,
    dump,
    encode_array,
    encode_particles,
    load,
)
from .workload import (
    WorkloadKind,
    WorkloadSpec,
    generate,
    prng_next,
    prng_uniform,
)

__version__ = "0.1.0"

__all__ = [
    "BadMagicError", "BenchRecord", "ChecksumError", "ConvergenceError",
    "CSV_COLUMNS", "DEFAULT_AOS_RECORD_BYTES", "DEFAULT_CHUNK_SIZE",
    "DEFAULT_K", "DEFAULT_LEAF_CAPACITY", "DEFAULT_MAX_ITERATIONS",
    "DEFAULT_SCATTER_FIELDS", "DegenerateWorkloadError", "H_GROWTH",
    "KernelKind", "KernelSpec", "LIVE_RECORD_BYTES", "LayoutConfig",
    "LayoutKind", "LoopStyle", "MissingBaselineError", "NeighborCandidate",
    "NondeterminismError", "Octree", "PRESETS", "ParticleSoA", "PassStats",
    "QueryWorkspace", "ReportRow", "ScheduleStats", "SchedulerKind",
    "SOA_MAX_BYTES_PER_PARTICLE", "SelectorKind", "SnapshotError",
    "SnapshotIOError", "TreeNode",
    "TruncatedError", "VariantConfig", "VectorMetrics", "VersionError",
    "WENDLAND_C6_NORM", "WorkloadKind", "WorkloadSpec", "adjust_smoothing_length",
    "aos_dtype", "append_records", "build_octree", "build_report",
    "checksum64", "compute_density_pass", "decode_array", "decode_particles",
    "density_checksum", "density_interact", "dump", "encode_array",
    "encode_particles", "format_report_csv", "format_report_markdown",
    "gather_to_soa", "generate", "initial_smoothing_length", "kernel_w",
    "load", "new_particle_array", "preset_config", "prng_next",
    "prng_uniform", "range_query", "read_records", "run_benchmark",
    "run_dynamic_for", "run_locked_queue", "run_todo_list",
    "scatter_from_soa", "select_k_fullsort", "select_k_quickselect",
    "validate_tree", "vector_metrics",
]
