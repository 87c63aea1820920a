import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from causalpol.specfun import (arccosh, arccosh1p, boost, energy, gauss_legendre_interval,
                               gauss_legendre_nodes, gegenbauer_c, legendre_all, legendre_p,
                               minkowski_excess, random_rotation, sinhc_ratio)

unit = st.floats(-1.0, 1.0)
vec = st.lists(st.floats(-30, 30), min_size=3, max_size=3).map(np.array)


@pytest.mark.parametrize("j,x,expected", [(0, 0.3, 1.0), (1, -0.7, -0.7), (2, 0.5, -0.125)])
def test_legendre_examples(j, x, expected):
    assert legendre_p(j, x) == pytest.approx(expected, abs=1e-15)


def test_legendre_rejects_outside_interval():
    with pytest.raises(ValueError):
        legendre_p(2, 1.5)
    with pytest.raises(ValueError):
        legendre_p(-1, 0.2)


def test_legendre_against_numpy():
    x = np.linspace(-1, 1, 101)
    for j in range(12):
        ref = np.polynomial.legendre.legval(x, [0] * j + [1])
        assert np.max(np.abs(legendre_p(j, x) - ref)) < 1e-13


@given(x=unit)
def test_legendre_bounded_and_endpoint(x):
    vals = legendre_all(20, np.array(x))
    assert np.all(np.abs(vals) <= 1 + 1e-12)
    assert np.allclose(legendre_all(20, np.array(1.0)), 1.0)


def test_gegenbauer_examples():
    assert gegenbauer_c(0, 1.5, 0.2) == pytest.approx(1.0)
    assert gegenbauer_c(1, 1.5, 0.2) == pytest.approx(0.6, abs=1e-15)
    assert abs(gegenbauer_c(4, 0.5, 0.9) - legendre_p(4, 0.9)) < 1e-12
    with pytest.raises(ValueError):
        gegenbauer_c(2, 0.0, 0.1)


@pytest.mark.parametrize("r", [0.5, 1.0, 1.5])
@pytest.mark.parametrize("h", [0.1, 0.3, 0.5])
def test_gegenbauer_generating_function(r, h):
    x = np.linspace(-1, 1, 21)
    partial = sum(gegenbauer_c(n, r, x) * h ** n for n in range(61))
    assert np.max(np.abs((1 - 2 * h * x + h * h) ** (-r) - partial)) < 1e-10


def test_gauss_legendre_examples():
    x, w = gauss_legendre_nodes(2)
    assert np.allclose(np.sort(x), [-1 / math.sqrt(3), 1 / math.sqrt(3)], atol=1e-15)
    assert np.allclose(w, 1.0)
    x, w = gauss_legendre_nodes(3)
    assert abs(np.sum(w * x ** 4) - 0.4) < 1e-14
    x, w = gauss_legendre_nodes(8)
    assert abs(np.sum(w * legendre_p(3, x) * legendre_p(5, x))) < 1e-13
    with pytest.raises(ValueError):
        gauss_legendre_nodes(0)


def test_gauss_legendre_interval_panels():
    x, w = gauss_legendre_interval(0.0, math.pi, 10, 4)
    assert abs(np.sum(w * np.sin(x)) - 2.0) < 1e-14


def test_energy_and_arccosh():
    assert energy(np.array([0.0, 0.0, math.sqrt(3)])) == pytest.approx(2.0)
    assert arccosh(math.cosh(2.0)) == pytest.approx(2.0, rel=1e-14)
    # tiny argument: arccosh1p keeps full relative precision where arccosh(1 + u) cannot
    u = 1e-14
    assert arccosh1p(u) == pytest.approx(math.sqrt(2 * u), rel=1e-6)


@settings(max_examples=200)
@given(k=vec, p=vec)
def test_minkowski_excess_matches_naive_and_is_nonnegative(k, p):
    ek, ep = math.sqrt(1 + k @ k), math.sqrt(1 + p @ p)
    naive = ek * ep - k @ p - 1.0
    t = float(minkowski_excess(k, p))
    assert t >= 0
    assert abs(t - naive) <= 1e-9 * max(1.0, ek * ep)


def test_minkowski_excess_diagonal_is_zero():
    p = np.array([3.0, -1.0, 0.5])
    assert minkowski_excess(p, p) == 0.0


@settings(max_examples=100)
@given(k=vec, p=vec, eta=st.floats(-2, 2), axis=st.integers(0, 2))
def test_excess_is_boost_invariant(k, p, eta, axis):
    a = float(minkowski_excess(k, p))
    b = float(minkowski_excess(boost(k, axis, eta), boost(p, axis, eta)))
    assert abs(a - b) <= 1e-9 * max(1.0, a) * math.cosh(eta) ** 2


def test_sinhc_ratio_limits():
    assert sinhc_ratio(0.0, 0.0, "principal") == pytest.approx(1.0)
    assert sinhc_ratio(0.0, 2.0, "principal") == pytest.approx(2 / math.sinh(2), rel=1e-14)
    assert sinhc_ratio(1.0, 2.0, "supplementary") == pytest.approx(1.0, rel=1e-14)
    assert sinhc_ratio(0.7, 1.3, "principal") == pytest.approx(
        math.sin(0.91) / (0.7 * math.sinh(1.3)), rel=1e-14)


def test_random_rotation_is_proper():
    R = random_rotation(np.random.default_rng(3))
    assert np.allclose(R @ R.T, np.eye(3), atol=1e-14)
    assert np.linalg.det(R) == pytest.approx(1.0)
