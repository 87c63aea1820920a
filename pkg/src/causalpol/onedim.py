"""One spatial dimension: kernels K1, the factorization through K1_{1/2}, the Gaussian counterexample."""
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.integrate import IntegrationWarning, quad
from scipy.optimize import brentq

from .kernels import RadialProfile, profile_power, profile_product
from .pd import DEFAULT_TOL, gram_test
from .specfun import energy_1d, minkowski_excess_1d


@dataclass(frozen=True, eq=False)
class Kernel1D:
    """K1(k, p) = (eps_k + eps_p)/(2 sqrt(eps_k eps_p)) g(eps_k eps_p - k p) on the real line."""
    profile: RadialProfile

    @property
    def mass(self):
        return self.profile.mass

    @property
    def name(self):
        return f"1d[{self.profile.label}]"

    def __call__(self, k, p):
        k = np.asarray(k, dtype=float)
        p = np.asarray(p, dtype=float)
        ek, ep = energy_1d(k, self.mass), energy_1d(p, self.mass)
        pref = (ek + ep) / (2.0 * np.sqrt(ek * ep))
        return pref * self.profile.of_excess(minkowski_excess_1d(k, p, self.mass))


def kernel_1d(profile):
    if abs(float(profile.of_excess(0.0)) - 1.0) > 1e-12:
        raise ValueError("profile must satisfy g(m^2) = 1")
    return Kernel1D(profile)


def half_kernel_1d(k, p):
    """Closed form of K1 for g = g_{1/2}: sqrt((1 + eps_k eps_p + k p)/(2 eps_k eps_p)), mass 1."""
    k = np.asarray(k, dtype=float)
    p = np.asarray(p, dtype=float)
    ek, ep = energy_1d(k), energy_1d(p)
    return np.sqrt((1.0 + ek * ep + k * p) / (2.0 * ek * ep))


def h_kernel(x, y):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    return (np.cosh(x / 2) / np.sqrt(np.cosh(x)) * np.cosh(y / 2) / np.sqrt(np.cosh(y))
            * (1.0 + np.tanh(x / 2) * np.tanh(y / 2)))


def stationary_kernel(profile):
    """(x, y) -> g(cosh(x - y)) on rapidities."""
    return lambda x, y: profile.of_rapidity(np.abs(np.asarray(x) - np.asarray(y)))


def prefactor_identity_residual(k, p):
    """Energy prefactor minus K1_{1/2}(k, p)/g_{1/2}(eps_k eps_p - k p), elementwise."""
    k = np.asarray(k, dtype=float)
    p = np.asarray(p, dtype=float)
    ek, ep = energy_1d(k), energy_1d(p)
    pref = (ek + ep) / (2.0 * np.sqrt(ek * ep))
    g_half = profile_power(0.5).of_excess(minkowski_excess_1d(k, p))
    return pref - half_kernel_1d(k, p) / g_half


def rapidity_identity_residual(profile, x, y):
    """K1(sinh x, sinh y) - h(x, y) (g / g_{1/2})(cosh(x - y)), elementwise."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    kappa = np.abs(x - y)
    ratio = profile.of_rapidity(kappa) / profile_power(0.5).of_rapidity(kappa)
    return kernel_1d(profile)(np.sinh(x), np.sinh(y)) - h_kernel(x, y) * ratio


def h_along_shift(c, x):
    """h(x, x + c); tends to 1 as x grows."""
    x = np.asarray(x, dtype=float)
    return h_kernel(x, x + c)


def ray_restriction_residual(kernel3d, k, p):
    """K(k e3, p e3) - K1(k, p) for signed momenta on a ray (profile kernels only)."""
    k = np.asarray(k, dtype=float)
    p = np.asarray(p, dtype=float)
    axis = np.array([0.0, 0.0, 1.0])
    return kernel3d(k[..., None] * axis, p[..., None] * axis) - kernel_1d(kernel3d.profile)(k, p)


@dataclass(frozen=True, eq=False)
class FactorizationReport:
    stationary: object
    kernel: object
    bound_excess: float

    @property
    def consistent(self):
        # K1(g g_{1/2}) PD exactly when the stationary factor is PD
        return (self.stationary.verdict == "pd_on_sample") == (self.kernel.verdict == "pd_on_sample")

    def to_json(self):
        return {"stationary": self.stationary.to_json(), "kernel": self.kernel.to_json(),
                "bound_excess": self.bound_excess, "consistent": self.consistent}


def factorization_check(profile, samples=None, tol=DEFAULT_TOL):
    """Gram-test g(cosh(x - y)) and K1 of g g_{1/2} on momenta sinh(x); check |K1| <= K1_{1/2}."""
    x = np.linspace(-8.0, 8.0, 49) if samples is None else np.asarray(samples, dtype=float)
    stationary = gram_test(stationary_kernel(profile), x, tol, f"stationary[{profile.label}]")
    K = kernel_1d(profile_product(profile, profile_power(0.5, profile.mass)))
    k = np.sinh(x)
    kernel = gram_test(K, k, tol, K.name)
    a, b = k[:, None], k[None, :]
    excess = float(np.max(np.abs(K(a, b)) - half_kernel_1d(a, b)))
    return FactorizationReport(stationary, kernel, excess)


def gaussian_f(x, varsigma):
    """f(x) = exp(-x^2/(2 varsigma^2)) cosh(x/2)."""
    x = np.asarray(x, dtype=float)
    return np.exp(-x * x / (2 * varsigma ** 2)) * np.cosh(x / 2)


def gaussian_f_prime(x, varsigma):
    x = np.asarray(x, dtype=float)
    return np.exp(-x * x / (2 * varsigma ** 2)) * (0.5 * np.sinh(x / 2) - x / varsigma ** 2 * np.cosh(x / 2))


def gaussian_f_hat(y, varsigma):
    """Unitary Fourier transform of f in closed form."""
    y = np.asarray(y, dtype=float)
    s2 = varsigma ** 2
    return varsigma * np.exp(s2 / 8) * np.cos(s2 * y / 2) * np.exp(-s2 * y * y / 2)


def fourier_cosine(fn, y, cutoff):
    """(2 pi)^(-1/2) int_R fn(x) e^{-ixy} dx for even fn, by QAWO quadrature on [0, cutoff]."""
    out = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", IntegrationWarning)
        for yy in np.atleast_1d(y):
            if yy == 0:
                val = quad(fn, 0.0, cutoff, epsabs=1e-14, epsrel=1e-13, limit=500)[0]
            else:
                val = quad(fn, 0.0, cutoff, weight="cos", wvar=float(yy), epsabs=1e-14, limit=500)[0]
            out.append(2.0 * val / np.sqrt(2 * np.pi))
    return np.array(out)


def _sign_changes(x, values):
    nz = values != 0
    xs, s = x[nz], np.sign(values[nz])
    idx = np.nonzero(s[1:] != s[:-1])[0]
    return [(xs[i], xs[i + 1]) for i in idx]


def gaussian_counterexample(varsigma, grid_points=100_001, y=None):
    """Checks that f = k cosh(x/2) is bounded by f(0) = 1 yet has a Fourier transform with a negative lobe."""
    s = float(varsigma)
    if not 0 < s <= 2:
        raise ValueError("varsigma must lie in (0, 2]")
    x = np.linspace(-20.0, 20.0, grid_points)
    f = gaussian_f(x, s)
    fp = gaussian_f_prime(x, s)
    roots = []
    for a, b in _sign_changes(x, fp):
        fa, fb = gaussian_f_prime(a, s), gaussian_f_prime(b, s)
        roots.append(float(a) if fa == 0 else float(b) if fb == 0 else
                     brentq(lambda t: gaussian_f_prime(t, s), a, b, xtol=1e-15))
    y = np.linspace(0.0, 3.0, 61) if y is None else np.asarray(y, dtype=float)
    y = np.union1d(y, [np.pi / 2])
    closed = gaussian_f_hat(y, s)
    cutoff = 2 * s * s + 12 * s + 40
    numeric = fourier_cosine(lambda t: gaussian_f(t, s), y, cutoff)
    i = int(np.argmin(closed))
    return {"varsigma": s, "f_max": float(f.max()), "argmax": float(x[np.argmax(f)]),
            "derivative_sign_changes": len(roots), "derivative_roots": roots,
            "y": y, "f_hat_closed": closed, "f_hat_numeric": numeric,
            "transform_max_abs_diff": float(np.max(np.abs(closed - numeric))),
            "f_hat_min": float(closed[i]), "f_hat_argmin": float(y[i]),
            "f_hat_half_pi": float(gaussian_f_hat(np.pi / 2, s)),
            "positive_type": bool(np.min(closed) >= 0)}


def gaussian_kernel_violation(varsigma=2.0, shift=10.0, half_width=12.0, n=97, tol=DEFAULT_TOL):
    """Gram test of K1 for the Gaussian profile on momenta sinh(shift + equispaced rapidities).

    Far from the origin h is nearly constant, so the Gram spectrum follows the Fourier transform of f.
    """
    from .kernels import profile_gaussian
    K = kernel_1d(profile_gaussian(varsigma))
    pts = np.sinh(shift + np.linspace(-half_width, half_width, n))
    return gram_test(K, pts, tol, K.name)


def levy_density(y):
    """Density of the Levy-Khinchin measure of -log cosh(x/2)."""
    y = np.asarray(y, dtype=float)
    return y / (2.0 * (1.0 + y * y) * np.sinh(np.pi * y))


def levy_khinchin_rhs(x):
    """int_R (cos xy - 1)(1 + y^2)/y^2 dmu(y), evaluated as twice the integral over y > 0."""
    def integrand(y):
        return -2.0 * np.sin(x * y / 2) ** 2 * (1 + y * y) / (y * y) * levy_density(y)

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", IntegrationWarning)
        val = quad(integrand, 0.0, 40.0, epsabs=1e-14, epsrel=1e-13, limit=1000)[0]
    return 2.0 * val


def infinite_divisibility_check(grid=None, tol=1e-8):
    x = np.linspace(0.0, 10.0, 41) if grid is None else np.atleast_1d(np.asarray(grid, dtype=float))
    lhs = -np.log(np.cosh(x / 2))
    rhs = np.array([levy_khinchin_rhs(v) for v in x])
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", IntegrationWarning)
        mass = 2.0 * quad(levy_density, 0.0, 40.0, epsabs=1e-14, limit=200)[0]
    err = float(np.max(np.abs(lhs - rhs)))
    return {"x": x, "lhs": lhs, "rhs": rhs, "max_abs_diff": err, "measure_mass": mass,
            "pass": err <= tol}


def werner_kernel(k, p, m=1.0):
    """2 sqrt(eps_k eps_p)/(eps_k + eps_p)."""
    ek, ep = energy_1d(k, m), energy_1d(p, m)
    return 2.0 * np.sqrt(ek * ep) / (ek + ep)


def werner_integral(a, b):
    """(1/2) int_0^inf (2 sqrt(a) e^{-la}) (2 sqrt(b) e^{-lb}) dl, a Gram form in L^2(0, inf)."""
    val = quad(lambda l: 4.0 * np.sqrt(a * b) * np.exp(-l * (a + b)), 0.0, np.inf, epsabs=1e-14)[0]
    return 0.5 * val


def werner_check(samples=None, tol=DEFAULT_TOL):
    k = np.linspace(-20.0, 20.0, 41) if samples is None else np.asarray(samples, dtype=float)
    report = gram_test(werner_kernel, k, tol, "werner")
    e = energy_1d(k)
    diff = max(abs(werner_integral(e[i], e[j]) - werner_kernel(k[i], k[j]))
               for i in range(0, len(k), 5) for j in range(0, len(k), 5))
    return report, float(diff)
