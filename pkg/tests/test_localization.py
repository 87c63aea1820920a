import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.special import spherical_jn

from causalpol import localization as L
from causalpol.kernels import kernel_nwl, kernel_power, kernel_tct, kernel_terno_moretti
from causalpol.specfun import random_rotation

SMALL_QMC = L.Budget(qmc_log2=13, qmc_randomizations=8)


def test_form_factor_examples():
    assert L.ball_form_factor(0.0, 1.0) == pytest.approx(4 * math.pi / 3, rel=1e-15)
    assert L.ball_form_factor(math.pi, 1.0) == pytest.approx(4 / math.pi, rel=1e-14)
    with pytest.raises(ValueError):
        L.ball_form_factor(-1.0, 1.0)


@settings(max_examples=100)
@given(q=st.floats(1e-8, 50), R=st.floats(0.1, 5))
def test_form_factor_vs_bessel(q, R):
    # 4 pi R^3 j_1(qR)/(qR)
    ref = 4 * math.pi * R ** 3 * spherical_jn(1, q * R) / (q * R)
    assert L.ball_form_factor(q, R) == pytest.approx(ref, rel=1e-12, abs=1e-14 * R ** 3)


def test_ball_validation_and_transforms():
    with pytest.raises(ValueError):
        L.BallRegion(radius=0.0)
    b = L.BallRegion((1.0, 0.0, 0.0), 2.0)
    assert b.grown(-0.5).radius == 2.5
    assert b.scaled(2).center == (2.0, 0.0, 0.0) and b.scaled(2).radius == 4.0


def test_state_normalization():
    assert L.state_norm2(L.gaussian_state(0.7)) == pytest.approx(1.0, abs=1e-12)
    for K in (kernel_terno_moretti(), kernel_power(1.5)):
        assert L.state_norm2(L.plss_state(K, 4.0)) == pytest.approx(1.0, abs=1e-10)
    st_ = L.custom_state(lambda p: np.exp(-np.sum(np.square(p), axis=-1)) + 0j, envelope=1.0)
    assert L.state_norm2(st_) == pytest.approx(1.0, abs=1e-10)
    with pytest.raises(ValueError):
        L.custom_state(lambda p: 1.0 / (1 + np.sum(np.square(p), axis=-1)) + 0j, envelope=1.0)
    with pytest.raises(ValueError):
        L.plss_state(kernel_tct(), 4.0, k0=(0.0, 0.0, 0.0))


def test_evolve_identity_and_composition():
    phi = L.gaussian_state(1.0, center=(0.3, 0.0, -0.2))
    p = np.random.default_rng(0).normal(size=(50, 3))
    assert np.array_equal(L.evolve(phi, 0.0)(p), phi(p))
    a = L.evolve(L.evolve(phi, 0.7), 1.6)(p)
    b = L.evolve(phi, 2.3)(p)
    assert np.max(np.abs(a - b)) <= 1e-14


def test_nwl_oracle_tensor_and_qmc():
    K = kernel_nwl()
    for s, R in ((1.0, 1.0), (0.5, 1.0), (2.0, 1.5)):
        p = L.probability(K, L.gaussian_state(s), L.BallRegion(radius=R), "tensor")
        assert abs(p.value - L.nwl_gaussian_oracle(s, R)) <= 1e-6
        assert p.error <= 1e-6
    q = L.probability(K, L.gaussian_state(1.0), L.BallRegion(radius=1.0), "qmc", SMALL_QMC)
    assert abs(q.value - L.nwl_gaussian_oracle(1.0, 1.0)) <= 3 * q.error


@pytest.mark.parametrize("K", [kernel_nwl(), kernel_terno_moretti(), kernel_power(1.5)], ids=lambda K: K.name)
def test_large_ball_limit(K):
    assert L.probability(K, L.gaussian_state(1.0), L.BallRegion(radius=12.0)).value >= 1 - 1e-4


def test_terno_moretti_regression_against_pinned_oracle():
    gold = L.golden()["tm_gaussian_s1_R1"]
    p = L.probability(kernel_terno_moretti(), L.gaussian_state(1.0), L.BallRegion(radius=1.0))
    assert abs(p.value - gold["qmc_value"]) <= 3 * gold["qmc_se"]
    assert abs(p.value - gold["tensor_value"]) <= 1e-9


@pytest.mark.parametrize("K", [kernel_terno_moretti(), kernel_power(1.5)], ids=lambda K: K.name)
def test_monotone_in_radius_and_bounded(K):
    vals = [L.probability(K, L.gaussian_state(1.0), L.BallRegion(radius=R)) for R in (0.5, 1, 2, 4)]
    for a, b in zip(vals, vals[1:]):
        assert b.value + b.error >= a.value - a.error
    assert all(-1e-12 <= v.value <= 1 + 1e-12 for v in vals)


def test_translation_covariance():
    K = kernel_terno_moretti()
    phi = L.gaussian_state(1.0, center=(0.2, -0.1, 0.4))
    ball = L.BallRegion((0.5, 0.0, 0.0), 1.0)
    b = np.array([1.5, -2.0, 0.7])
    a = L.probability(K, phi, ball, "qmc", SMALL_QMC)
    c = L.probability(K, L.translate(phi, b), L.BallRegion(tuple(np.add(ball.center, b)), 1.0), "qmc", SMALL_QMC)
    assert abs(a.value - c.value) <= 1e-10


def test_rotation_covariance():
    K = kernel_terno_moretti()
    R = random_rotation(np.random.default_rng(5))
    ball = L.BallRegion(radius=1.5)
    a = L.probability(K, L.plss_state(K, 2.0), ball, "tensor")
    b = L.probability(K, L.plss_state(K, 2.0, k0=tuple(R @ [0.0, 0.0, 1.0])), ball, "tensor")
    assert abs(a.value - b.value) <= 1e-8
    phi = L.gaussian_state(1.0, center=(0.3, 0.0, 0.0))
    off = L.BallRegion((0.3, 0.0, 0.0), 1.0)
    c = L.probability(K, phi, off, "qmc", SMALL_QMC)
    d = L.probability(K, L.rotate(phi, R), L.BallRegion(tuple(R @ [0.3, 0.0, 0.0]), 1.0), "qmc", SMALL_QMC)
    assert abs(c.value - d.value) <= 4 * (c.error + d.error)


def test_deterministic_paths_agree():
    K = kernel_tct()
    phi = L.plss_state(K, 4.0)
    ball = L.BallRegion(radius=2.0)
    a = L.probability(K, phi, ball, "tensor")
    b = L.probability(K, phi, ball, "bessel")
    assert abs(a.value - b.value) <= 1e-9
    with pytest.raises(ValueError):
        L.probability(kernel_power(1.5), L.gaussian_state(1.0), ball, "bessel")
    with pytest.raises(ValueError):
        L.probability(K, phi, L.BallRegion((1.0, 0.0, 0.0), 1.0), "tensor")
    with pytest.raises(ValueError):
        L.probability(K, phi, ball, "simpson")


def test_ct_margin_at_zero_time_and_positive():
    K = kernel_power(1.5)
    phi = L.gaussian_state(1.0)
    ball = L.BallRegion(radius=1.0)
    zero = L.ct_inequality(K, phi, ball, 0.0)
    assert abs(zero.margin) <= 3 * zero.error + 1e-14
    one = L.ct_inequality(K, phi, ball, 1.0)
    assert one.margin >= -1e-4 and one.error <= 1e-3


def test_plss_increasing_for_terno_moretti():
    seq = L.plss_sequence(kernel_terno_moretti(), ns=(2, 4, 8))
    vals = [p.value for _, p in seq]
    assert vals[0] < vals[1] < vals[2] < 1


@pytest.mark.parametrize("K,limit", [(kernel_terno_moretti(), L.limit_tm), (kernel_tct(), L.limit_tct),
                                     (kernel_power(0.5), L.limit_half)], ids=["tm", "tct", "half"])
def test_limit_kernels(K, limit):
    rng = np.random.default_rng(9)
    k, p = rng.normal(size=(40, 3)) * 2, rng.normal(size=(40, 3))
    assert np.max(np.abs(L.richardson_limit(K, k, p) - limit(k, p))) <= 1e-8


def test_norm_bounds():
    ball = L.BallRegion(radius=1.0)
    nwl = L.norm_lower_bound(kernel_nwl(), ball, 4)
    assert nwl.bound > 0.999
    b4, b8 = L.norm_lower_bounds(kernel_terno_moretti(), ball, [4, 8])
    assert b8.bound >= b4.bound - b8.error
    assert b8.bound < 1
    with pytest.raises(ValueError):
        L.norm_lower_bounds(kernel_nwl(), ball, [0])
    assert L.van_der_corput(1) == 0.5 and L.van_der_corput(3) == 0.75


def test_mass_scaling():
    ball = L.BallRegion(radius=1.0)
    phi = L.gaussian_state(1.0)
    assert L.mass_scaling_check(lambda m: kernel_power(1.5, m), 1.0, ball, phi)["residual"] == 0.0
    assert L.mass_scaling_check(lambda m: kernel_power(1.5, m), 2.0, ball, phi)["residual"] <= 1e-4
    assert L.mass_scaling_check(lambda m: kernel_terno_moretti(m), 0.5, ball, phi)["residual"] <= 1e-4
