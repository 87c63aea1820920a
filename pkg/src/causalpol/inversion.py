"""Principal-series inversion: profile g -> weight function w(lambda) and back."""
from dataclasses import dataclass

import numpy as np

from .kernels import RadialProfile
from .pd import gram_test
from .specfun import gauss_legendre_interval, sinhc_ratio

LAMBDA_MAX = 12.0
LAMBDA_POINTS = 4096
X_DEFAULT = 40.0
X_CAP = 200.0
DECAY_TOL = 1e-10
FD_STEP = 2e-3


class InversionError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class WeightFunction:
    lam: np.ndarray
    values: np.ndarray
    source: str = ""
    imag_max: float = 0.0
    cutoff: float = X_DEFAULT
    atoms: tuple = ()

    @property
    def normalization(self):
        return float(np.trapezoid(self.values, self.lam)) + sum(w for _, w in self.atoms)

    def rows(self):
        return list(zip(self.lam.tolist(), self.values.tolist()))

    def to_json(self):
        return {"source": self.source, "points": int(self.lam.size), "lambda_max": float(self.lam[-1]),
                "normalization": self.normalization, "imag_max": self.imag_max,
                "cutoff": self.cutoff, "min_value": float(self.values.min())}


def principal_bound_violation(profile, kappa=None):
    """max over kappa of |g| - kappa/sinh kappa (positive means supplementary content)."""
    kappa = np.linspace(0.0, 40.0, 4001) if kappa is None else np.asarray(kappa, dtype=float)
    g = np.abs(profile.of_rapidity(kappa))
    bound = sinhc_ratio(0.0, kappa, "principal")
    return float(np.max(g - bound * (1 + 1e-12)))


def psi_of(profile, check=True):
    """psi(x) = d/dx (sinh x g(cosh x)), closed form when available, else Richardson differences."""
    if check:
        excess = principal_bound_violation(profile)
        if excess > 0:
            raise InversionError(f"profile exceeds kappa/sinh kappa by {excess:.3e}: supplementary content")
    if profile.psi is not None:
        return profile.psi

    def F(x):
        return np.sinh(x) * profile.of_rapidity(np.abs(x))

    def psi(x, h=FD_STEP):
        x = np.asarray(x, dtype=float)
        d1 = (F(x + h) - F(x - h)) / (2 * h)
        d2 = (F(x + h / 2) - F(x - h / 2)) / h
        return (4 * d2 - d1) / 3

    return psi


def decay_cutoff(psi, start=X_DEFAULT, cap=X_CAP, tol=DECAY_TOL):
    """Smallest X >= start (step 8) with |psi| < tol on [X - 1, X]."""
    X = start
    while X <= cap:
        probe = np.linspace(X - 1.0, X, 33)
        if np.max(np.abs(psi(probe))) < tol:
            return X
        X += 8.0
    raise InversionError(f"psi does not decay below {tol:g} by x = {cap:g} (not integrable or atomic)")


def invert(profile, lam_max=LAMBDA_MAX, points=LAMBDA_POINTS, cutoff=None):
    """w(lambda) = (1/pi) int psi(x) exp(-i lambda x) dx by panel Gauss quadrature."""
    psi = psi_of(profile) if isinstance(profile, RadialProfile) else profile
    source = profile.label if isinstance(profile, RadialProfile) else "psi"
    X = decay_cutoff(psi) if cutoff is None else float(cutoff)
    panels = int(np.ceil(X / 0.5))
    x, wq = gauss_legendre_interval(0.0, X, 16, panels)
    psi_pos, psi_neg = psi(x), psi(-x)
    lam = np.linspace(0.0, lam_max, points)
    re = np.empty(points)
    im = np.empty(points)
    even = wq * (psi_pos + psi_neg)
    odd = wq * (psi_pos - psi_neg)
    for i in range(0, points, 512):
        arg = lam[i:i + 512, None] * x[None, :]
        re[i:i + 512] = np.cos(arg) @ even / np.pi
        im[i:i + 512] = -(np.sin(arg) @ odd) / np.pi
    w = WeightFunction(lam, re, source, float(np.max(np.abs(im))), X)
    if w.values.min() < -1e-8:
        raise InversionError(f"weight function negative ({w.values.min():.3e})")
    return w


def forward(w, t):
    """g(t) = int_0^inf sin(lambda kappa)/(lambda sinh kappa) w(lambda) dlambda (trapezoid) + atoms."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    kappa = np.arccosh(np.maximum(t, 1.0))
    lam = w.lam
    tw = np.full(lam.size, lam[1] - lam[0]) * w.values
    tw[0] *= 0.5
    tw[-1] *= 0.5
    out = np.empty(t.size)
    for i in range(0, t.size, 256):
        out[i:i + 256] = sinhc_ratio(lam[None, :], kappa[i:i + 256, None], "principal") @ tw
    for lam0, weight in w.atoms:
        out += weight * sinhc_ratio(lam0, kappa, "principal")
    return out


def weight_from_density(fn, lam_max=LAMBDA_MAX, points=LAMBDA_POINTS, source="density", atoms=()):
    lam = np.linspace(0.0, lam_max, points)
    return WeightFunction(lam, np.asarray(fn(lam), dtype=float), source, atoms=tuple(atoms))


def psi_positive_type_check(profile, grid=None, tol=1e-10):
    """Gram test of the stationary kernel psi(x - y); psi must be normalized and decaying."""
    psi = psi_of(profile) if isinstance(profile, RadialProfile) else profile
    if abs(float(psi(np.array(0.0))) - 1.0) > 1e-8:
        raise InversionError("psi(0) != 1")
    decay_cutoff(psi)
    grid = np.linspace(-10.0, 10.0, 41) if grid is None else np.asarray(grid, dtype=float)
    return gram_test(lambda a, b: psi(a - b), grid, tol, f"psi[{getattr(profile, 'label', 'custom')}]")
