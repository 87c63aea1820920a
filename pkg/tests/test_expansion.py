import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from causalpol.expansion import (adaptive_order, extract_coefficients, half_profile_coefficient,
                                 power_zeroth_coefficient, reconstruct, tail_bound)
from causalpol.kernels import (Kernel, kernel_lorentz, kernel_nwl, kernel_power, kernel_tct,
                               kernel_terno_moretti, profile_power)

GRID = np.array([0.2, 0.5, 1.0, 2.0, 5.0])


def test_nwl_coefficients():
    co = extract_coefficients(kernel_nwl(), 6, GRID)
    assert np.max(np.abs(co.table[0] - 1)) < 1e-14
    assert np.max(np.abs(co.table[1:])) < 1e-14
    assert tail_bound(extract_coefficients(kernel_nwl(), 0), 3.0) == pytest.approx(0.0, abs=1e-14)


def test_terno_moretti_first_coefficient():
    co = extract_coefficients(kernel_terno_moretti(), 3)
    k = co(1.0, 2.0)
    assert k[1] == pytest.approx(2.0 / (2 * math.sqrt(2) * math.sqrt(5)), abs=1e-10)
    assert np.max(np.abs(k[2:])) < 1e-13
    assert abs(tail_bound(extract_coefficients(kernel_terno_moretti(), 1), 1.0)) < 1e-12


def test_half_profile_closed_form():
    co = extract_coefficients(kernel_lorentz(profile_power(0.5)), 8, GRID)
    for j in range(9):
        closed = half_profile_coefficient(j, GRID[:, None], GRID[None, :])
        assert np.max(np.abs(co.table[j] - closed)) < 1e-8


def test_half_profile_tail_and_reconstruction():
    K = kernel_lorentz(profile_power(0.5))
    co = extract_coefficients(K, 20)
    assert tail_bound(co, 1.0) < 1e-6
    # g_{1/2} at t = eps(1)^2 - 0.5 = 1.5
    assert reconstruct(co, 1.0, 1.0, 0.5) == pytest.approx(math.sqrt(2 / 2.5), abs=1e-8)


def test_causal_reconstruction():
    K = kernel_power(1.5)
    co = extract_coefficients(K, 40)
    k = np.array([0.0, 0.0, 2.0])
    p = 3.0 * np.array([0.0, math.sqrt(1 - 0.04), -0.2])
    assert reconstruct(co, 2.0, 3.0, -0.2) == pytest.approx(float(K(k, p)), abs=1e-6)


@pytest.mark.parametrize("r", [0.5, 1.0, 1.25, 1.5])
def test_power_zeroth_coefficient_vs_projection(r):
    co = extract_coefficients(kernel_power(r), 0)
    s, q = np.array([0.3, 1.0, 4.0]), np.array([2.0, 0.7, 9.0])
    assert np.max(np.abs(co(s, q)[0] - power_zeroth_coefficient(r, s, q))) < 1e-11


@settings(max_examples=6, deadline=None)
@given(rho=st.floats(0.05, 20))
def test_diagonal_partial_sums_bounded(rho):
    for K in (kernel_power(1.5), kernel_tct(), kernel_terno_moretti()):
        co = extract_coefficients(K, 12, check=False)
        kj = co(rho, rho)
        assert np.all(kj >= -1e-13)
        assert np.sum(kj) <= 1 + 1e-12


def test_adaptive_order():
    J, partial = adaptive_order(kernel_lorentz(profile_power(0.5)), 1.0)
    h = 1 / (1 + math.sqrt(2))
    # geometric decay with ratio h^2: deficit after J terms is h^(2J+2)
    assert 1 - partial[J] < 1e-6
    assert J == math.ceil(math.log(1e-6) / (2 * math.log(h)) - 1)


def test_input_validation():
    with pytest.raises(ValueError):
        extract_coefficients(kernel_nwl(), -1)
    with pytest.raises(ValueError):
        extract_coefficients(kernel_nwl(), 10, order=5)
    skew = Kernel("skew", "none", lambda s, r, x: x, vector=lambda k, p: k[..., 0] * p[..., 0] + 1)
    with pytest.raises(ValueError):
        extract_coefficients(skew, 2)
