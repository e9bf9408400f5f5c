"""Wendland C6 smoothing kernel (3-D).

W(r, h) = C/h^3 * (1-q)^8 * (1 + 8q + 25q^2 + 32q^3) for q = r/h < 1, else 0,
with C = 1365/(64*pi) so that the kernel integrates to one over R^3 for any
h > 0. Support radius is exactly h.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from numba import njit

WENDLAND_C6_NORM = 1365.0 / (64.0 * math.pi)


class KernelKind(Enum):
    WENDLAND_C6 = "wendland_c6"


@dataclass(frozen=True)
class KernelSpec:
    kind: KernelKind = KernelKind.WENDLAND_C6
    normalization: float = WENDLAND_C6_NORM


@njit(cache=True, nogil=True, inline="always")
def _unit_profile(q):
    # dimensionless profile, valid for 0 <= q < 1 (hits 0.0 exactly at q = 1)
    u = 1.0 - q
    u2 = u * u
    u4 = u2 * u2
    return u4 * u4 * (1.0 + q * (8.0 + q * (25.0 + 32.0 * q)))


@njit(cache=True, nogil=True, inline="always")
def _w_lowered(r, h):
    # support test folded into the kernel: out-of-range radii yield weight 0
    q = r / h
    if q < 1.0:
        return WENDLAND_C6_NORM / (h * h * h) * _unit_profile(q)
    return 0.0


@njit(cache=True, nogil=True)
def _w_array(r, h, out):
    for i in range(r.shape[0]):
        out[i] = _w_lowered(r[i], h)


def kernel_w(r, h: float):
    """Kernel weight at separation ``r`` for smoothing length ``h``.

    Accepts a scalar or an array of separations. Raises for ``h <= 0``.
    """
    if h <= 0.0:
        raise ValueError(f"smoothing length must be positive, got {h}")
    if np.ndim(r) == 0:
        rf = float(r)
        if rf < 0.0:
            raise ValueError(f"separation must be non-negative, got {rf}")
        return float(_w_lowered(rf, float(h)))
    arr = np.ascontiguousarray(r, dtype=np.float64)
    if arr.size and arr.min() < 0.0:
        raise ValueError("separations must be non-negative")
    out = np.empty_like(arr)
    _w_array(arr.ravel(), float(h), out.ravel())
    return out
