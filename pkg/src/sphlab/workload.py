"""Deterministic synthetic particle workloads.

All randomness comes from splitmix64, chosen because it is fully specified
by 64-bit integer arithmetic: the same seed gives bit-identical workloads on
any platform, which makes snapshots and density checksums comparable across
machines. Generation is single-threaded; the sequential PRNG stream defines
the data.

Three workload kinds:

* UniformBox: positions uniform in [0, box_side)^3.
* GaussianBlobs: blob centers drawn uniformly, then particles scattered
  around a blob with Box-Muller normal offsets and wrapped periodically into
  the box. Mimics halo clustering, producing the local density contrast that
  makes static work partitioning unbalanced.
* Lattice: particles at the cell centers of the smallest m^3 grid with
  m^3 >= n, in row-major order. The uniform-density reference case.

Masses are 1; smoothing lengths start at the radius that would enclose
k_neighbors particles at uniform density; every recompute flag starts set.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from numba import njit

from .density import DEFAULT_K, initial_smoothing_length
from .particles import DEFAULT_AOS_RECORD_BYTES, new_particle_array

_MASK64 = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB
_TO_UNIT = 2.0 ** -53


def prng_next(state: int) -> tuple[int, int]:
    """One splitmix64 step: returns (output value, new state)."""
    state = (state + _GAMMA) & _MASK64
    z = state
    z = ((z ^ (z >> 30)) * _MIX1) & _MASK64
    z = ((z ^ (z >> 27)) * _MIX2) & _MASK64
    return z ^ (z >> 31), state


def prng_uniform(state: int) -> tuple[float, int]:
    """One uniform double in [0, 1) from the top 53 bits of the next value."""
    value, state = prng_next(state)
    return (value >> 11) * _TO_UNIT, state


@njit(cache=True, nogil=True, inline="always")
def _sm64_u01(s):
    s = s + np.uint64(_GAMMA)
    z = s
    z = (z ^ (z >> np.uint64(30))) * np.uint64(_MIX1)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(_MIX2)
    z = z ^ (z >> np.uint64(31))
    return (z >> np.uint64(11)) * _TO_UNIT, s


@njit(cache=True, nogil=True, inline="always")
def _scale_into(u, box):
    # u in [0,1) scaled to [0, box); the guard covers the one rounding case
    # (power-of-two box, u = 1 - 2^-53) where u*box rounds up to box itself
    v = u * box
    if v >= box:
        v = np.nextafter(box, 0.0)
    return v


@njit(cache=True, nogil=True)
def _fill_uniform_box(seed, box, out):
    s = np.uint64(seed)
    for i in range(out.shape[0]):
        for a in range(3):
            u, s = _sm64_u01(s)
            out[i, a] = _scale_into(u, box)
    return s


@njit(cache=True, nogil=True)
def _fill_gaussian_blobs(seed, box, blob_count, sigma, out):
    s = np.uint64(seed)
    centers = np.empty((blob_count, 3), np.float64)
    for b in range(blob_count):
        for a in range(3):
            u, s = _sm64_u01(s)
            centers[b, a] = _scale_into(u, box)
    two_pi = 2.0 * math.pi
    for i in range(out.shape[0]):
        u, s = _sm64_u01(s)
        b = int(u * blob_count)
        if b >= blob_count:
            b = blob_count - 1
        u1, s = _sm64_u01(s)
        u2, s = _sm64_u01(s)
        u3, s = _sm64_u01(s)
        u4, s = _sm64_u01(s)
        # Box-Muller; 1-u keeps the log argument in (0, 1]
        r1 = math.sqrt(-2.0 * math.log(1.0 - u1))
        r2 = math.sqrt(-2.0 * math.log(1.0 - u3))
        g0 = r1 * math.cos(two_pi * u2)
        g1 = r1 * math.sin(two_pi * u2)
        g2 = r2 * math.cos(two_pi * u4)
        out[i, 0] = (centers[b, 0] + sigma * g0) % box
        out[i, 1] = (centers[b, 1] + sigma * g1) % box
        out[i, 2] = (centers[b, 2] + sigma * g2) % box
        for a in range(3):
            if out[i, a] >= box:
                out[i, a] -= box
            if out[i, a] < 0.0:
                out[i, a] = 0.0
    return s


class WorkloadKind(Enum):
    UNIFORM_BOX = "uniform-box"
    GAUSSIAN_BLOBS = "gaussian-blobs"
    LATTICE = "lattice"


@dataclass(frozen=True)
class WorkloadSpec:
    kind: WorkloadKind
    n_particles: int
    box_side: float = 1.0
    seed: int = 0
    blob_count: int = 8
    blob_sigma: float = 0.06  # standard deviation as a fraction of box_side

    def __post_init__(self):
        if self.n_particles < 1:
            raise ValueError(f"n_particles must be >= 1, got {self.n_particles}")
        if not self.box_side > 0.0:
            raise ValueError(f"box_side must be > 0, got {self.box_side}")
        if self.kind is WorkloadKind.GAUSSIAN_BLOBS:
            if self.blob_count < 1:
                raise ValueError("blob_count must be >= 1")
            if not self.blob_sigma > 0.0:
                raise ValueError("blob_sigma must be > 0")


def _lattice_positions(n: int, box: float) -> np.ndarray:
    m = round(n ** (1.0 / 3.0))
    if m ** 3 < n:
        m += 1
    a = box / m
    p = np.arange(n, dtype=np.int64)
    out = np.empty((n, 3), dtype=np.float64)
    out[:, 0] = (p // (m * m) + 0.5) * a
    out[:, 1] = ((p // m) % m + 0.5) * a
    out[:, 2] = (p % m + 0.5) * a
    return out


def generate(spec: WorkloadSpec, k_neighbors: int = DEFAULT_K,
             aos_record_bytes: int = DEFAULT_AOS_RECORD_BYTES) -> np.ndarray:
    """Build the particle array for a workload spec. Pure function of spec."""
    n = spec.n_particles
    pos = np.empty((n, 3), dtype=np.float64)
    if spec.kind is WorkloadKind.UNIFORM_BOX:
        _fill_uniform_box(spec.seed & _MASK64, spec.box_side, pos)
    elif spec.kind is WorkloadKind.GAUSSIAN_BLOBS:
        _fill_gaussian_blobs(spec.seed & _MASK64, spec.box_side,
                             spec.blob_count, spec.blob_sigma * spec.box_side,
                             pos)
    else:
        pos = _lattice_positions(n, spec.box_side)

    particles = new_particle_array(n, aos_record_bytes)
    particles["id"] = np.arange(n, dtype=np.int64)
    particles["x"] = pos[:, 0]
    particles["y"] = pos[:, 1]
    particles["z"] = pos[:, 2]
    particles["mass"] = 1.0
    particles["smoothing_length"] = initial_smoothing_length(
        spec.box_side, n, k_neighbors)
    particles["density"] = 0.0
    particles["needs_recompute"] = 1
    return particles
