"""Particle storage layouts and the gather/scatter conversion between them.

Two layouts coexist: a padded array-of-records (``ParticleAoS``, a numpy
structured array whose record size mimics a production particle struct) and a
compact structure-of-arrays (:class:`ParticleSoA`) holding only the fields the
density kernel touches. The AoS stays authoritative for everything else;
gather/scatter moves the live fields across.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

# Live fields of one particle record, in declaration order. The opaque
# padding block brings the record up to ``record_bytes``; no computation
# ever reads it.
_LIVE_FIELDS = [
    ("id", "<i8"),
    ("x", "<f8"),
    ("y", "<f8"),
    ("z", "<f8"),
    ("mass", "<f8"),
    ("smoothing_length", "<f8"),
    ("density", "<f8"),
    ("needs_recompute", "u1"),
]

LIVE_RECORD_BYTES = sum(np.dtype(t).itemsize for _, t in _LIVE_FIELDS)

DEFAULT_AOS_RECORD_BYTES = 224

#: Upper bound on the per-particle footprint of the compact layout.
SOA_MAX_BYTES_PER_PARTICLE = 64

#: Fields gather/scatter understand. "position" covers x, y and z.
ALL_FIELDS = frozenset({"position", "mass", "smoothing_length", "density", "needs_recompute"})

#: Default write-back set: only what the density pass may have changed.
DEFAULT_SCATTER_FIELDS = frozenset({"density", "smoothing_length", "needs_recompute"})


class LayoutKind(Enum):
    AOS = "aos"
    SOA = "soa"


@dataclass(frozen=True)
class LayoutConfig:
    """Sizing and selection of the particle data layout."""

    aos_record_bytes: int = DEFAULT_AOS_RECORD_BYTES
    layout_kind: LayoutKind = LayoutKind.AOS

    def __post_init__(self):
        _check_record_bytes(self.aos_record_bytes)


def _check_record_bytes(record_bytes: int) -> None:
    if record_bytes < 64 or record_bytes < LIVE_RECORD_BYTES:
        raise ValueError(
            f"aos_record_bytes must be >= {max(64, LIVE_RECORD_BYTES)}, got {record_bytes}"
        )


def aos_dtype(record_bytes: int = DEFAULT_AOS_RECORD_BYTES) -> np.dtype:
    """Packed structured dtype for one particle record of the given size."""
    _check_record_bytes(record_bytes)
    pad = record_bytes - LIVE_RECORD_BYTES
    fields = list(_LIVE_FIELDS)
    if pad:
        fields.append(("pad", "u1", (pad,)))
    dt = np.dtype(fields)
    assert dt.itemsize == record_bytes
    return dt


def new_particle_array(n: int, record_bytes: int = DEFAULT_AOS_RECORD_BYTES) -> np.ndarray:
    """Zero-initialized AoS collection of ``n`` particles."""
    if n < 0:
        raise ValueError("particle count must be non-negative")
    return np.zeros(n, dtype=aos_dtype(record_bytes))


@dataclass
class ParticleSoA:
    """Compact per-field arrays for the density kernel.

    Holds only the fields the kernel reads or writes; everything is a
    contiguous float64/uint8 array of identical length.
    """

    x: np.ndarray
    y: np.ndarray
    z: np.ndarray
    mass: np.ndarray
    smoothing_length: np.ndarray
    density: np.ndarray
    needs_recompute: np.ndarray

    #: bytes actually stored per particle (3 coords + 3 scalars + flag)
    BYTES_PER_PARTICLE = 6 * 8 + 1

    @property
    def count(self) -> int:
        return int(self.x.shape[0])

    @classmethod
    def empty(cls, n: int) -> "ParticleSoA":
        return cls(
            x=np.empty(n),
            y=np.empty(n),
            z=np.empty(n),
            mass=np.empty(n),
            smoothing_length=np.empty(n),
            density=np.empty(n),
            needs_recompute=np.empty(n, dtype=np.uint8),
        )

    def validate(self) -> None:
        n = self.count
        for name in ("y", "z", "mass", "smoothing_length", "density", "needs_recompute"):
            arr = getattr(self, name)
            if arr.shape != (n,):
                raise ValueError(f"SoA field {name} has shape {arr.shape}, expected ({n},)")


assert ParticleSoA.BYTES_PER_PARTICLE <= SOA_MAX_BYTES_PER_PARTICLE


def gather_to_soa(particles: np.ndarray, out: ParticleSoA | None = None,
                  start: int = 0, stop: int | None = None) -> ParticleSoA:
    """Copy the live kernel fields out of the AoS into a compact SoA.

    ``start``/``stop`` restrict the copy to an index range, so several
    workers can gather disjoint ranges of the same target concurrently.
    """
    n = particles.shape[0]
    if stop is None:
        stop = n
    if out is None:
        out = ParticleSoA.empty(n)
    if out.count != n:
        raise ValueError(f"gather target holds {out.count} particles, source has {n}")
    sl = slice(start, stop)
    out.x[sl] = particles["x"][sl]
    out.y[sl] = particles["y"][sl]
    out.z[sl] = particles["z"][sl]
    out.mass[sl] = particles["mass"][sl]
    out.smoothing_length[sl] = particles["smoothing_length"][sl]
    out.density[sl] = particles["density"][sl]
    out.needs_recompute[sl] = particles["needs_recompute"][sl]
    return out


def scatter_from_soa(soa: ParticleSoA, particles: np.ndarray,
                     fields: frozenset[str] | set[str] = DEFAULT_SCATTER_FIELDS,
                     start: int = 0, stop: int | None = None) -> np.ndarray:
    """Write selected SoA fields back into the AoS; everything else is untouched."""
    if soa.count != particles.shape[0]:
        raise ValueError(
            f"scatter size mismatch: SoA holds {soa.count} particles, "
            f"AoS holds {particles.shape[0]}"
        )
    unknown = set(fields) - ALL_FIELDS
    if unknown:
        raise ValueError(f"unknown scatter fields: {sorted(unknown)}")
    if stop is None:
        stop = soa.count
    sl = slice(start, stop)
    if "position" in fields:
        particles["x"][sl] = soa.x[sl]
        particles["y"][sl] = soa.y[sl]
        particles["z"][sl] = soa.z[sl]
    if "mass" in fields:
        particles["mass"][sl] = soa.mass[sl]
    if "smoothing_length" in fields:
        particles["smoothing_length"][sl] = soa.smoothing_length[sl]
    if "density" in fields:
        particles["density"][sl] = soa.density[sl]
    if "needs_recompute" in fields:
        particles["needs_recompute"][sl] = soa.needs_recompute[sl]
    return particles
