import math

import numpy as np
import pytest

from causalpol.inversion import (InversionError, decay_cutoff, forward, invert, psi_of,
                                 psi_positive_type_check, weight_from_density)
from causalpol.kernels import profile_custom, profile_irreducible, profile_power

CLOSED = {1.0: lambda l: 4 * l / np.sinh(np.pi * l),
          2.0: lambda l: 8 * l ** 3 / np.sinh(np.pi * l),
          1.5: lambda l: 8 * l ** 2 / np.cosh(np.pi * l)}


def test_psi_closed_forms():
    x = np.linspace(-6, 6, 61)
    assert np.allclose(psi_of(profile_power(1.0))(x), 2 / (1 + np.cosh(x)), atol=1e-14)
    c = np.cosh(x / 2)
    assert np.allclose(psi_of(profile_power(1.5))(x), (2 - c * c) / c ** 3, atol=1e-14)
    assert psi_of(profile_power(1.5))(np.array(2.0)) < 0


def test_psi_finite_difference_path():
    g = profile_custom(lambda t: 2 / (1 + t), "g1_numeric")
    x = np.linspace(-6, 6, 61)
    assert np.max(np.abs(psi_of(g)(x) - 2 / (1 + np.cosh(x)))) < 1e-9


@pytest.mark.parametrize("r", sorted(CLOSED))
def test_invert_closed_forms(r):
    w = invert(profile_power(r))
    mask = (w.lam >= 0.1) & (w.lam <= 5.0)
    rel = np.abs(w.values[mask] - CLOSED[r](w.lam[mask])) / CLOSED[r](w.lam[mask])
    assert rel.max() <= 1e-6
    assert w.normalization == pytest.approx(1.0, abs=1e-6)


def test_weight_of_g1_at_one():
    w = invert(profile_power(1.0), lam_max=2.0, points=3)
    assert w.lam[1] == 1.0
    assert w.values[1] == pytest.approx(4 / math.sinh(math.pi), rel=1e-8)


def test_supplementary_rejected():
    with pytest.raises(InversionError):
        invert(profile_irreducible("supplementary", 0.5))


@pytest.mark.parametrize("r", sorted(CLOSED))
def test_round_trip(r):
    t = np.geomspace(1, 100, 60)
    back = forward(invert(profile_power(r)), t)
    g = profile_power(r)(t)
    assert np.max(np.abs(back - g) / g) <= 1e-5
    assert back[0] == pytest.approx(1.0, abs=1e-6)


def test_forward_of_point_mass():
    w = weight_from_density(lambda l: np.zeros_like(l), atoms=[(0.0, 1.0)])
    t = np.array([1.0, 2.0, 10.0])
    kappa = np.arccosh(t)
    expected = np.where(kappa > 0, kappa / np.sinh(np.where(kappa > 0, kappa, 1)), 1.0)
    assert np.allclose(forward(w, t), expected, atol=1e-14)


def test_psi_positive_type():
    assert psi_positive_type_check(profile_power(1.0)).verdict == "pd_on_sample"
    assert psi_positive_type_check(profile_power(1.5)).verdict == "pd_on_sample"
    with pytest.raises(InversionError):
        psi_positive_type_check(lambda x: np.cos(3 * np.asarray(x)))


def test_decay_failure():
    with pytest.raises(InversionError):
        decay_cutoff(lambda x: np.ones_like(np.asarray(x, dtype=float)))


def _si_profile_values(t):
    from scipy.special import sici
    kappa = np.arccosh(np.asarray(t, dtype=float))
    safe = np.where(kappa > 0, kappa, 1.0)
    return np.where(kappa > 0, sici(safe)[0] / np.sinh(safe), 1.0)


def test_forward_of_uniform_density_is_si_profile():
    # density 1 on [0, 1], with the jump on a grid node
    w = weight_from_density(lambda l: np.where(l < 1, 1.0, np.where(l == 1, 0.5, 0.0)),
                            lam_max=12.0, points=12 * 512 + 1)
    t = np.geomspace(1, 100, 50)
    ref = _si_profile_values(t)
    assert np.max(np.abs(forward(w, t) - ref) / ref) <= 1e-5


def test_si_profile_is_rejected_by_invert():
    # psi(x) = sin(x)/x is not absolutely integrable
    with pytest.raises(InversionError):
        invert(profile_custom(_si_profile_values, "si"))
