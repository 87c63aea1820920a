import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from causalpol.causality import (boost_four_vector, conserved_check, four_current, maximality_check,
                                 minkowski_dot, nc_check, nc_irreducible_identity, sample_pairs,
                                 timelike_definite_check)
from causalpol.kernels import (kernel_lorentz, kernel_nwl, kernel_power, kernel_product,
                               kernel_terno_moretti, profile_irreducible, profile_power)
from causalpol.specfun import boost, energy

vec = st.lists(st.floats(-10, 10), min_size=3, max_size=3).map(np.array)


def test_nc_half_profile_equality_at_one():
    rep = nc_check(profile_power(0.5), "profile_only", [1.0])
    value = 2 / (1 + math.sqrt(2))
    assert rep.lhs[0] == pytest.approx(value, abs=1e-12)
    assert rep.rhs[0] == pytest.approx(value, abs=1e-12)


def test_nc_fingerprints():
    rep = nc_check(profile_power(1.5), "with_prefactor", [0.5, 1, 2, 5])
    assert np.max(np.abs(rep.margin)) <= 1e-10
    assert np.max(np.abs(nc_check(profile_power(0.5), "profile_only").margin)) <= 1e-10


def test_nc_violation():
    assert nc_check(profile_power(1.0), "with_prefactor", [3.0]).margin[0] < 0
    for r in (0.25, 0.4):
        assert nc_check(profile_power(r), "profile_only").worst[1] < -1e-6


def test_nc_mode_validation():
    with pytest.raises(ValueError):
        nc_check(profile_power(1.0), "sideways")


def test_irreducible_radial_average():
    out = nc_irreducible_identity("principal", 0.0, [1.0])
    # (ln(1 + sqrt 2))^2
    assert out["rhs_closed"][0] == pytest.approx(math.log(1 + math.sqrt(2)) ** 2, rel=1e-14)
    assert out["rhs_quadrature"][0] == pytest.approx(math.log(1 + math.sqrt(2)) ** 2, abs=1e-12)
    for kind, lam in (("principal", 0.0), ("principal", 1.5), ("supplementary", 0.5)):
        assert nc_irreducible_identity(kind, lam)["max_abs_diff"] <= 1e-10


def test_sample_pairs_reproducible_and_in_range():
    k1, p1 = sample_pairs(1000, 3)
    k2, p2 = sample_pairs(1000, 3)
    assert np.array_equal(k1, k2) and np.array_equal(p1, p2)
    r = np.linalg.norm(k1, axis=1)
    assert r[:500].max() <= 20 and r[500:].max() <= 1e3 * (1 + 1e-12)


def test_maximality():
    pairs = sample_pairs(20_000, 1)
    same = maximality_check(kernel_power(1.5), pairs, strict=False)
    assert same["max_excess"] == 0.0
    k2 = maximality_check(kernel_power(2), pairs)
    assert k2["pass"] and k2["min_margin"] > 0
    prod = kernel_product(kernel_power(1.5), kernel_lorentz(profile_irreducible("supplementary", 0.0)))
    assert maximality_check(prod, pairs)["pass"]
    with pytest.warns(UserWarning):
        maximality_check(kernel_nwl(), pairs, strict=False)


def test_maximality_violated_below_three_halves():
    out = maximality_check(kernel_power(1.0), sample_pairs(2000, 0))
    assert not out["pass"] and out["max_excess"] > 0


def test_conserved_currents():
    assert conserved_check(kernel_terno_moretti()) <= 1e-12
    assert conserved_check(kernel_power(1.5)) <= 1e-12
    k, p = np.array([[0.0, 0, 1]]), np.array([[0.0, 0, 3]])
    assert conserved_check(kernel_nwl(), (k, p)) == pytest.approx(math.sqrt(10) - math.sqrt(2))


def test_timelike_definite():
    assert timelike_definite_check(kernel_terno_moretti(), n=5, seeds=range(200)) >= -1e-10
    assert timelike_definite_check(kernel_power(1.5), n=5, seeds=range(200)) >= -1e-10


@settings(max_examples=50)
@given(p=vec)
def test_single_point_current_bound(p):
    for K in (kernel_terno_moretti(), kernel_power(1.5), kernel_power(3)):
        j = K.current(p, p)
        assert np.allclose(j, p / energy(p), atol=1e-14)
        assert np.linalg.norm(j) <= 1


@settings(max_examples=50)
@given(k=vec, p=vec)
def test_zero_component_matches_kernel(k, p):
    prof = profile_power(1.5)
    v = four_current(prof, k, p)
    assert v[0] / math.sqrt(energy(k) * energy(p)) == pytest.approx(float(kernel_power(1.5)(k, p)), abs=1e-13)
    # on-shell conservation (k - p) . v = 0 in Minkowski signature
    k4 = np.concatenate([[energy(k)], k])
    p4 = np.concatenate([[energy(p)], p])
    assert abs(minkowski_dot(k4 - p4, v)) <= 1e-12 * max(1.0, energy(k) * energy(p))


@settings(max_examples=50)
@given(k=vec, p=vec, eta=st.floats(-1.5, 1.5), axis=st.integers(0, 2))
def test_four_current_is_covariant(k, p, eta, axis):
    prof = profile_power(2.0)
    lhs = four_current(prof, boost(k, axis, eta), boost(p, axis, eta))
    rhs = boost_four_vector(four_current(prof, k, p), axis, eta)
    assert np.allclose(lhs, rhs, rtol=1e-10, atol=1e-10)
