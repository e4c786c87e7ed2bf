import numpy as np
import pytest

from dnpsteady.quadrature import (adaptive_simpson, adaptive_simpson_split,
                                  graded_simpson_columns,
                                  piecewise_primitive_columns,
                                  simpson_columns)


def test_adaptive_simpson_polynomial():
    # exact antiderivative x^4/4
    val = adaptive_simpson(lambda t: t ** 3, 0.0, 2.0, tol=1e-12)
    assert abs(val - 4.0) < 1e-12


def test_adaptive_simpson_reversed_limits():
    val = adaptive_simpson(lambda t: t, 1.0, 0.0)
    assert abs(val + 0.5) < 1e-12


def test_adaptive_simpson_split_kink():
    # |t - 0.3| integrated over [0, 1]: 0.3^2/2 + 0.7^2/2
    val = adaptive_simpson_split(lambda t: abs(t - 0.3), 0.0, 1.0,
                                 breakpoints=[0.3], tol=1e-12)
    assert abs(val - (0.045 + 0.245)) < 1e-12


def test_simpson_columns_entrywise():
    hi = np.array([0.5, 1.0, 2.0])
    got = simpson_columns(lambda t: t ** 2, np.zeros(3), hi, tol=1e-12)
    assert np.allclose(got, hi ** 3 / 3.0, atol=1e-12)


def test_simpson_columns_zero_width():
    got = simpson_columns(lambda t: t, np.ones(2), np.ones(2))
    assert np.all(got == 0.0)


def test_simpson_columns_rejects_reversed():
    with pytest.raises(ValueError):
        simpson_columns(lambda t: t, np.array([1.0]), np.array([0.0]))


def test_graded_columns_sqrt_endpoint():
    hi = np.array([1.0, 2.0])
    got = graded_simpson_columns(lambda t: np.sqrt(t), np.zeros(2), hi,
                                 tol=1e-12)
    assert np.allclose(got, (2.0 / 3.0) * hi ** 1.5, atol=1e-12)


def test_piecewise_primitive_split_kink():
    # integrand max(t, 0.4) has a kink at 0.4
    def fn(t):
        return np.maximum(t, 0.4)

    upper = np.array([0.2, 0.4, 1.0])
    got = piecewise_primitive_columns(fn, upper, breakpoints=(0.4,),
                                      tol=1e-12)
    exact = np.array([0.4 * 0.2, 0.4 * 0.4, 0.4 * 0.4 + (1 - 0.16) / 2.0])
    assert np.allclose(got, exact, atol=1e-11)
