"""Checksummed binary snapshots for workloads and results.

File layout, little-endian throughout:

    magic   4 bytes, ASCII "SPHK"
    version u32, currently 1
    count   u32, number of sections
    then per section:
        name_len u32, name bytes (UTF-8),
        payload_len u64, payload bytes,
        checksum u64 (FNV-1a 64 of the payload)

Every section checksum is verified on load before anything is returned, so
a caller never sees partially valid data. Load failures are distinct error
types: bad magic, unsupported version, truncation, checksum mismatch (which
names the failing section), and plain I/O errors carrying the path.

Particle payloads are serialized field by field in declaration order,
all values of one field together (all ids, then all x, ...), each field in
its own little-endian width. That keeps the on-disk form independent of the
in-memory record padding.
"""

from __future__ import annotations

import struct
from typing import Mapping

import numpy as np
from numba import njit

from .particles import _LIVE_FIELDS, new_particle_array

MAGIC = b"SPHK"
VERSION = 1

FNV_OFFSET_BASIS = 0xCBF29CE484222325
FNV_PRIME = 0x100000001B3


class SnapshotError(Exception):
    """Base for everything that can go wrong with snapshot files."""


class SnapshotIOError(SnapshotError):
    pass


class BadMagicError(SnapshotError):
    pass


class VersionError(SnapshotError):
    pass


class TruncatedError(SnapshotError):
    pass


class ChecksumError(SnapshotError):
    def __init__(self, section: str, stored: int, computed: int):
        self.section = section
        super().__init__(
            f"section {section!r}: stored checksum {stored:#018x} != "
            f"computed {computed:#018x}"
        )


@njit(cache=True, nogil=True)
def _fnv1a(data):
    h = np.uint64(FNV_OFFSET_BASIS)
    p = np.uint64(FNV_PRIME)
    for i in range(data.shape[0]):
        h = (h ^ np.uint64(data[i])) * p
    return h


def checksum64(data) -> int:
    """FNV-1a 64-bit digest of a byte sequence."""
    buf = np.frombuffer(memoryview(data), dtype=np.uint8)
    return int(_fnv1a(buf))


def dump(path, sections: Mapping[str, bytes]) -> None:
    """Write named byte blocks to a snapshot file, in mapping order."""
    parts = [MAGIC, struct.pack("<II", VERSION, len(sections))]
    for name, payload in sections.items():
        raw = bytes(payload)
        name_bytes = name.encode("utf-8")
        parts.append(struct.pack("<I", len(name_bytes)))
        parts.append(name_bytes)
        parts.append(struct.pack("<Q", len(raw)))
        parts.append(raw)
        parts.append(struct.pack("<Q", checksum64(raw)))
    try:
        with open(path, "wb") as f:
            f.write(b"".join(parts))
    except OSError as exc:
        raise SnapshotIOError(f"cannot write snapshot {path!r}: {exc}") from exc


class _Cursor:
    def __init__(self, buf: bytes, path):
        self.buf = buf
        self.off = 0
        self.path = path

    def take(self, n: int, what: str) -> bytes:
        if self.off + n > len(self.buf):
            raise TruncatedError(
                f"snapshot {self.path!r} truncated while reading {what} "
                f"(need {n} bytes at offset {self.off}, have "
                f"{len(self.buf) - self.off})"
            )
        out = self.buf[self.off:self.off + n]
        self.off += n
        return out

    def u32(self, what: str) -> int:
        return struct.unpack("<I", self.take(4, what))[0]

    def u64(self, what: str) -> int:
        return struct.unpack("<Q", self.take(8, what))[0]


def load(path) -> dict[str, bytes]:
    """Read a snapshot, verify every section checksum, return name -> bytes."""
    try:
        with open(path, "rb") as f:
            buf = f.read()
    except OSError as exc:
        raise SnapshotIOError(f"cannot read snapshot {path!r}: {exc}") from exc

    cur = _Cursor(buf, path)
    magic = cur.take(4, "magic")
    if magic != MAGIC:
        raise BadMagicError(
            f"snapshot {path!r}: bad magic {magic!r}, expected {MAGIC!r}"
        )
    version = cur.u32("version")
    if version != VERSION:
        raise VersionError(
            f"snapshot {path!r}: unsupported version {version}, "
            f"expected {VERSION}"
        )
    count = cur.u32("section count")
    sections: dict[str, bytes] = {}
    for _ in range(count):
        name_len = cur.u32("section name length")
        name = cur.take(name_len, "section name").decode("utf-8")
        payload_len = cur.u64(f"payload length of {name!r}")
        payload = cur.take(payload_len, f"payload of {name!r}")
        stored = cur.u64(f"checksum of {name!r}")
        computed = checksum64(payload)
        if stored != computed:
            raise ChecksumError(name, stored, computed)
        sections[name] = payload
    return sections


def encode_array(arr: np.ndarray) -> bytes:
    """Raw little-endian float64 bytes of a 1-D array."""
    return np.ascontiguousarray(arr, dtype="<f8").tobytes()


def decode_array(payload: bytes) -> np.ndarray:
    if len(payload) % 8:
        raise TruncatedError(
            f"float64 payload length {len(payload)} is not a multiple of 8"
        )
    return np.frombuffer(payload, dtype="<f8").copy()


def encode_particles(particles: np.ndarray) -> bytes:
    """Field-by-field little-endian encoding, one field's values at a time."""
    n = particles.shape[0]
    parts = [struct.pack("<Q", n)]
    for name, dtype in _LIVE_FIELDS:
        parts.append(
            np.ascontiguousarray(particles[name]).astype(
                np.dtype(dtype).newbyteorder("<"), copy=False
            ).tobytes()
        )
    return b"".join(parts)


def decode_particles(payload: bytes, aos_record_bytes: int | None = None) -> np.ndarray:
    if len(payload) < 8:
        raise TruncatedError("particle payload shorter than its count header")
    n = struct.unpack("<Q", payload[:8])[0]
    kwargs = {} if aos_record_bytes is None else {"record_bytes": aos_record_bytes}
    out = new_particle_array(n, **kwargs)
    off = 8
    for name, dtype in _LIVE_FIELDS:
        dt = np.dtype(dtype).newbyteorder("<")
        nbytes = n * dt.itemsize
        if off + nbytes > len(payload):
            raise TruncatedError(
                f"particle payload truncated in field {name!r}"
            )
        out[name] = np.frombuffer(payload, dtype=dt, count=n, offset=off)
        off += nbytes
    if off != len(payload):
        raise SnapshotError(
            f"particle payload has {len(payload) - off} trailing bytes"
        )
    return out
