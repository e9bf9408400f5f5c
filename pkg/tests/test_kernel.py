import math

import numpy as np
import pytest
from scipy.integrate import quad

from sphlab import WENDLAND_C6_NORM, KernelKind, KernelSpec, kernel_w


def test_normalization_constant():
    assert WENDLAND_C6_NORM == 1365.0 / (64.0 * math.pi)
    assert abs(WENDLAND_C6_NORM - 6.78895304126366) < 1e-13


def test_central_value_is_norm_over_h_cubed():
    assert kernel_w(0.0, 1.0) == WENDLAND_C6_NORM
    for h in (0.25, 1.7, 42.0):
        assert np.isclose(kernel_w(0.0, h), WENDLAND_C6_NORM / h**3,
                          rtol=1e-15)


def test_unit_mass_integral():
    # 4*pi * integral of r^2 W(r, h) dr over [0, h] must be one for any h
    for h in (0.05, 1.0, 3.7):
        val, _ = quad(lambda r: 4.0 * math.pi * r * r * kernel_w(r, h),
                      0.0, h, limit=200)
        assert abs(val - 1.0) < 1e-3
        assert abs(val - 1.0) < 1e-12  # in practice it is machine-exact


def test_compact_support():
    assert kernel_w(1.0, 1.0) == 0.0
    assert kernel_w(2.3, 2.3) == 0.0
    rng = np.random.default_rng(0)
    h = 0.8
    r = h + rng.random(1000) * 10.0
    assert np.all(kernel_w(r, h) == 0.0)
    # immediately inside the support the weight is positive
    assert kernel_w(np.nextafter(h, 0.0), h) > 0.0


def test_monotone_nonincreasing():
    h = 1.3
    r = np.linspace(0.0, h, 1001)
    w = kernel_w(r, h)
    assert np.all(np.diff(w) <= 0.0)
    assert w[0] == kernel_w(0.0, h)
    assert w[-1] == 0.0


def test_scaling_identity():
    # W(r, h) = h^-3 W(r/h, 1)
    rng = np.random.default_rng(1)
    for _ in range(200):
        h = 10.0 ** rng.uniform(-3, 3)
        r = rng.random() * h
        lhs = kernel_w(r, h)
        rhs = kernel_w(r / h, 1.0) / h**3
        assert abs(lhs - rhs) <= 1e-12 * abs(rhs)


def test_array_input_shape_and_values():
    h = 0.6
    r = np.array([[0.0, 0.3], [0.59, 0.61]])
    w = kernel_w(r, h)
    assert w.shape == r.shape
    for idx in np.ndindex(r.shape):
        assert w[idx] == kernel_w(float(r[idx]), h)
    assert kernel_w(np.array([]), h).shape == (0,)


def test_invalid_arguments():
    with pytest.raises(ValueError):
        kernel_w(0.5, 0.0)
    with pytest.raises(ValueError):
        kernel_w(0.5, -1.0)
    with pytest.raises(ValueError):
        kernel_w(-0.1, 1.0)
    with pytest.raises(ValueError):
        kernel_w(np.array([0.1, -0.2]), 1.0)


def test_kernel_spec_defaults():
    spec = KernelSpec()
    assert spec.kind is KernelKind.WENDLAND_C6
    assert spec.normalization == WENDLAND_C6_NORM
