"""Checksummed snapshots: the workload and result container.

Every section of the file carries an FNV-1a checksum, so a snapshot either
loads exactly as written or refuses to load. The same files drive the CLI:

    sphlab gen --kind blobs --n 8192 --out workload.sphk
    sphlab run workload.sphk --variant optimised --save-results r.sphk
    sphlab verify r.sphk other.sphk
"""

import tempfile
from pathlib import Path

import numpy as np

from sphlab import (
    ChecksumError,
    WorkloadKind,
    WorkloadSpec,
    decode_particles,
    dump,
    encode_particles,
    generate,
    load,
)


def main():
    particles = generate(WorkloadSpec(WorkloadKind.UNIFORM_BOX, 4096, seed=9),
                         k_neighbors=32)
    with tempfile.TemporaryDirectory() as tmp:
        path = Path(tmp) / "workload.sphk"
        dump(path, {
            "meta": b'{"comment": "demo workload"}',
            "particles": encode_particles(particles),
        })
        size = path.stat().st_size
        print(f"wrote {path.name}: {size} bytes "
              f"({size / particles.shape[0]:.1f} per particle)")

        sections = load(path)
        restored = decode_particles(sections["particles"])
        identical = all(
            np.array_equal(restored[f], particles[f])
            for f in ("id", "x", "y", "z", "mass", "smoothing_length",
                      "density", "needs_recompute")
        )
        print(f"round trip field-for-field identical: {identical}")

        # flip one bit in the middle of the particle payload
        raw = bytearray(path.read_bytes())
        raw[size // 2] ^= 0x10
        path.write_bytes(bytes(raw))
        try:
            load(path)
            print("corruption NOT detected -- this must never happen")
        except ChecksumError as exc:
            print(f"single flipped bit detected: {exc}")


if __name__ == "__main__":
    main()
