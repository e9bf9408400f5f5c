"""Benchmark command line: gen, run, report, verify.

Exit codes: 0 success, 1 usage problems, 2 correctness failures (verify
mismatch, nondeterministic repeats, non-converging passes), 3 I/O and file
format problems. The SPHLAB_THREADS environment variable supplies the
default for --threads.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import bench, snapshot
from .density import (
    DEFAULT_K,
    DEFAULT_MAX_ITERATIONS,
    ConvergenceError,
    DegenerateWorkloadError,
    PRESETS,
    initial_smoothing_length,
    preset_config,
)
from .particles import DEFAULT_AOS_RECORD_BYTES
from .workload import WorkloadKind, WorkloadSpec, generate

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_CORRECTNESS = 2
EXIT_IO = 3

_KIND_ALIASES = {
    "uniform": WorkloadKind.UNIFORM_BOX,
    "uniform-box": WorkloadKind.UNIFORM_BOX,
    "blobs": WorkloadKind.GAUSSIAN_BLOBS,
    "gaussian-blobs": WorkloadKind.GAUSSIAN_BLOBS,
    "lattice": WorkloadKind.LATTICE,
}


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 on bad flags; route through our own codes
    def error(self, message):
        raise _UsageError(f"{self.prog}: {message}")


def _build_parser() -> _Parser:
    p = _Parser(prog="sphlab", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate a workload snapshot")
    g.add_argument("--kind", required=True, choices=sorted(_KIND_ALIASES))
    g.add_argument("--n", required=True, type=int, help="particle count")
    g.add_argument("--box", type=float, default=1.0, help="box side length")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--blob-count", type=int, default=8)
    g.add_argument("--blob-sigma", type=float, default=0.06,
                   help="blob standard deviation as a fraction of the box side")
    g.add_argument("--k", type=int, default=DEFAULT_K,
                   help="neighbor count used to initialize smoothing lengths")
    g.add_argument("--record-bytes", type=int, default=DEFAULT_AOS_RECORD_BYTES)
    g.add_argument("--out", required=True, help="output snapshot path")

    r = sub.add_parser("run", help="benchmark one variant on a workload")
    r.add_argument("snapshot", help="workload snapshot from gen")
    r.add_argument("--variant", required=True, choices=sorted(PRESETS))
    r.add_argument("--threads", type=int, default=None,
                   help="worker threads (default: $SPHLAB_THREADS or 1)")
    r.add_argument("--repeats", type=int, default=1)
    r.add_argument("--k", type=int, default=None,
                   help="neighbor count (default: the workload's)")
    r.add_argument("--chunk-size", type=int, default=None)
    r.add_argument("--max-iterations", type=int, default=DEFAULT_MAX_ITERATIONS)
    r.add_argument("--csv", default="results.csv", help="CSV to append rows to")
    r.add_argument("--save-results", default=None,
                   help="also write the density array to this snapshot")

    t = sub.add_parser("report", help="speedup/efficiency tables from a CSV")
    t.add_argument("csv")
    t.add_argument("--baseline-variant", default="original")
    t.add_argument("--baseline-threads", type=int, default=1)
    t.add_argument("--format", choices=("markdown", "csv"), default="markdown")
    t.add_argument("--t-scalar", type=float, default=None,
                   help="scalar-loop seconds for the S_v block")
    t.add_argument("--t-vector", type=float, default=None,
                   help="vector-loop seconds for the S_v block")
    t.add_argument("--vl", type=int, default=None, help="vector length")

    v = sub.add_parser("verify", help="compare two result snapshots")
    v.add_argument("left")
    v.add_argument("right")
    v.add_argument("--rtol", type=float, default=0.0,
                   help="relative tolerance (0 = bit-exact)")
    return p


def _resolve_threads(value: int | None) -> int:
    if value is None:
        raw = os.environ.get("SPHLAB_THREADS", "1")
        try:
            value = int(raw)
        except ValueError:
            raise _UsageError(f"SPHLAB_THREADS={raw!r} is not an integer")
    if value < 1:
        raise _UsageError(f"thread count must be >= 1, got {value}")
    return value


def _cmd_gen(args) -> int:
    spec = WorkloadSpec(
        kind=_KIND_ALIASES[args.kind], n_particles=args.n,
        box_side=args.box, seed=args.seed,
        blob_count=args.blob_count, blob_sigma=args.blob_sigma,
    )
    particles = generate(spec, k_neighbors=args.k,
                         aos_record_bytes=args.record_bytes)
    meta = {
        "format": "sphlab-workload",
        "kind": spec.kind.value,
        "n_particles": spec.n_particles,
        "box_side": spec.box_side,
        "seed": spec.seed,
        "blob_count": spec.blob_count,
        "blob_sigma": spec.blob_sigma,
        "k_neighbors": args.k,
        "record_bytes": args.record_bytes,
    }
    snapshot.dump(args.out, {
        "meta": json.dumps(meta, sort_keys=True).encode("utf-8"),
        "particles": snapshot.encode_particles(particles),
    })
    print(f"wrote {args.out}: {spec.n_particles} particles "
          f"({spec.kind.value}, seed {spec.seed})")
    return EXIT_OK


def _cmd_run(args) -> int:
    threads = _resolve_threads(args.threads)
    if args.repeats < 1:
        raise _UsageError(f"--repeats must be >= 1, got {args.repeats}")
    sections = snapshot.load(args.snapshot)
    if "particles" not in sections:
        raise snapshot.SnapshotError(
            f"{args.snapshot!r} has no 'particles' section"
        )
    meta = json.loads(sections["meta"]) if "meta" in sections else {}
    particles = snapshot.decode_particles(
        sections["particles"],
        aos_record_bytes=meta.get("record_bytes"))

    k = args.k if args.k is not None else int(meta.get("k_neighbors", DEFAULT_K))
    if args.k is not None and args.k != meta.get("k_neighbors"):
        box = float(meta.get("box_side", 1.0))
        particles["smoothing_length"] = initial_smoothing_length(
            box, particles.shape[0], k)

    overrides = {"k_neighbors": k}
    if args.chunk_size is not None:
        overrides["chunk_size"] = args.chunk_size
    config = preset_config(args.variant, **overrides)

    if args.max_iterations < 1:
        raise _UsageError(
            f"--max-iterations must be >= 1, got {args.max_iterations}")
    records, densities = bench.run_benchmark(
        particles, config, args.variant, threads, args.repeats,
        max_iterations=args.max_iterations)
    bench.append_records(args.csv, records)
    for r in records:
        print(f"{r.variant} threads={r.threads} repeat={r.repeat} "
              f"iterations={r.iterations} t_total={r.t_total_s:.6f}s "
              f"checksum={r.checksum_hex}")

    if args.save_results:
        run_meta = {
            "format": "sphlab-results",
            "variant": args.variant,
            "threads": threads,
            "k_neighbors": k,
            "n_particles": int(particles.shape[0]),
            "source": str(args.snapshot),
        }
        snapshot.dump(args.save_results, {
            "meta": json.dumps(run_meta, sort_keys=True).encode("utf-8"),
            "densities": snapshot.encode_array(densities),
        })
        print(f"wrote {args.save_results}")
    return EXIT_OK


def _cmd_report(args) -> int:
    vector_flags = (args.t_scalar, args.t_vector, args.vl)
    given = sum(f is not None for f in vector_flags)
    if given not in (0, 3):
        raise _UsageError(
            "--t-scalar, --t-vector, and --vl must be given together"
        )
    vector = (bench.vector_metrics(args.t_scalar, args.t_vector, args.vl)
              if given == 3 else None)
    records = bench.read_records(args.csv)
    rows = bench.build_report(records, args.baseline_variant,
                              args.baseline_threads)
    if args.format == "markdown":
        print(bench.format_report_markdown(rows, vector))
    else:
        print(bench.format_report_csv(rows, vector))
    return EXIT_OK


def _compare(name: str, a: np.ndarray, b: np.ndarray, rtol: float) -> str | None:
    if a.shape != b.shape:
        return f"{name}: shape {a.shape} != {b.shape}"
    if rtol == 0.0:
        if not np.array_equal(a, b):
            i = int(np.flatnonzero(a != b)[0])
            return (f"{name}: first bitwise mismatch at index {i}: "
                    f"{a[i]!r} != {b[i]!r}")
        return None
    denom = np.maximum(np.abs(b), np.finfo(np.float64).tiny)
    rel = np.abs(a - b) / denom
    worst = float(rel.max()) if rel.size else 0.0
    if worst > rtol:
        i = int(rel.argmax())
        return (f"{name}: max relative error {worst:.3e} at index {i} "
                f"exceeds rtol {rtol:.3e}")
    return None


def _cmd_verify(args) -> int:
    left = snapshot.load(args.left)
    right = snapshot.load(args.right)
    compared = 0
    problems: list[str] = []

    if "densities" in left and "densities" in right:
        problems.append(_compare(
            "densities",
            snapshot.decode_array(left["densities"]),
            snapshot.decode_array(right["densities"]),
            args.rtol,
        ))
        compared += 1
    if "particles" in left and "particles" in right:
        pa = snapshot.decode_particles(left["particles"])
        pb = snapshot.decode_particles(right["particles"])
        for field in pa.dtype.names:
            if field == "pad":
                continue
            problems.append(_compare(
                f"particles.{field}",
                np.asarray(pa[field], dtype=np.float64),
                np.asarray(pb[field], dtype=np.float64),
                args.rtol,
            ))
        compared += 1

    if compared == 0:
        raise snapshot.SnapshotError(
            "snapshots share no comparable sections "
            "(need 'densities' or 'particles' in both)"
        )
    problems = [p for p in problems if p is not None]
    if problems:
        for p in problems:
            print(p, file=sys.stderr)
        return EXIT_CORRECTNESS
    how = "bit-exact" if args.rtol == 0.0 else f"within rtol {args.rtol:g}"
    print(f"snapshots match ({how})")
    return EXIT_OK


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "gen":
            return _cmd_gen(args)
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "report":
            return _cmd_report(args)
        return _cmd_verify(args)
    except (_UsageError, bench.MissingBaselineError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (bench.NondeterminismError, ConvergenceError,
            DegenerateWorkloadError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CORRECTNESS
    except snapshot.SnapshotError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
