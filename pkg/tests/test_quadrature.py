import itertools
from math import factorial

import numpy as np
import pytest

from esfem.quadrature import barycentric, sample_points, sampling_rule, triangle_rule


def monomial_mean(p, q):
    # mean over the reference triangle of xi1^p xi2^q (area 1/2)
    return 2.0 * factorial(p) * factorial(q) / factorial(p + q + 2)


@pytest.mark.parametrize("order", [2, 4, 6])
def test_exactness(order):
    xi, w = triangle_rule(order)
    assert w.sum() == pytest.approx(1.0, abs=1e-14)
    assert np.all(w > 0)
    assert np.all(xi >= 0) and np.all(xi.sum(axis=1) <= 1)
    for p, q in itertools.product(range(order + 1), repeat=2):
        if p + q <= order:
            approx = np.sum(w * xi[:, 0] ** p * xi[:, 1] ** q)
            assert approx == pytest.approx(monomial_mean(p, q), abs=1e-12)


def test_degree_beyond_order_not_exact():
    xi, w = triangle_rule(2)
    assert abs(np.sum(w * xi[:, 0] ** 3) - monomial_mean(3, 0)) > 1e-4


def test_unknown_order():
    with pytest.raises(ValueError):
        triangle_rule(5)


def test_barycentric_partition_of_unity():
    xi = np.random.default_rng(0).uniform(0, 0.5, (10, 2))
    np.testing.assert_allclose(barycentric(xi).sum(axis=1), 1.0)


def test_sampling_set():
    pts = sample_points()
    assert pts.shape == (9, 2)
    xi, w = sampling_rule()
    np.testing.assert_array_equal(xi, pts)
    np.testing.assert_array_equal(w[:3], 0.0)
    assert w.sum() == pytest.approx(1.0)
