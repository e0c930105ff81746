import math

import numpy as np
import pytest

from balred.quadrature import gauss_legendre, integrate_to_infinity, interval_integrals


def test_polynomial_is_exact():
    val = gauss_legendre(lambda t: (t ** 5 - 2 * t)[:, None], 0.0, 2.0)
    assert val[0] == pytest.approx(2 ** 6 / 6 - 4, rel=1e-14)


def test_matrix_valued_exponential():
    def f(t):
        return np.stack([np.exp(-t), np.exp(-3 * t)], axis=1)

    val = gauss_legendre(f, 0.0, 1.5)
    np.testing.assert_allclose(val, [1 - math.exp(-1.5), (1 - math.exp(-4.5)) / 3], rtol=1e-12)


def test_empty_interval():
    assert np.array_equal(gauss_legendre(lambda t: np.ones((len(t), 2)), 1.0, 1.0), np.zeros(2))


def test_infinite_horizon_exponential():
    val = integrate_to_infinity(lambda t: np.exp(-0.5 * t)[:, None], rtol=1e-12)
    assert val[0] == pytest.approx(2.0, rel=1e-10)


def test_interval_integrals_constant_profile():
    edges = np.concatenate([[0.0], 0.1 * np.arange(1, 11)])
    vals = interval_integrals(lambda s, o: np.full((len(s), len(o)), 3.0), edges)
    np.testing.assert_allclose(vals, 0.3, rtol=1e-13)


def test_interval_integrals_nonuniform_edges():
    edges = np.array([0.0, 0.3, 0.5, 1.7, 1.8])

    def f(starts, offsets):
        t = starts[:, None] + offsets[None, :]
        return np.sin(3 * t) ** 2

    vals = interval_integrals(f, edges)
    F = lambda t: t / 2 - np.sin(6 * t) / 12
    np.testing.assert_allclose(vals, F(edges[1:]) - F(edges[:-1]), rtol=1e-10)


def test_nonconvergence_raises():
    with pytest.raises(RuntimeError):
        gauss_legendre(lambda t: (1 / np.sqrt(np.abs(t - 0.3)))[:, None], 0.0, 1.0, rtol=1e-14, max_level=3)
