"""Legendre coefficient kernels k_j(sigma, rho) of rotation-invariant kernels."""
from dataclasses import dataclass

import numpy as np

from .specfun import gauss_legendre_nodes, legendre_all, random_rotation

TAIL_TOL = 1e-6
J_MAX = 128


def radial_configuration(sigma, rho, x):
    """Momenta sigma e3 and rho (0, sqrt(1 - x^2), x), broadcast over the inputs."""
    sigma, rho, x = np.broadcast_arrays(*(np.asarray(a, dtype=float) for a in (sigma, rho, x)))
    k = np.zeros(sigma.shape + (3,))
    k[..., 2] = sigma
    p = np.stack([np.zeros_like(x), rho * np.sqrt(np.clip(1 - x * x, 0, None)), rho * x], axis=-1)
    return k, p


def radial_values(K, sigma, rho, x):
    """k(sigma, rho, x) = K(sigma e3, rho (0, sqrt(1 - x^2), x))."""
    k, p = radial_configuration(sigma, rho, x)
    return K(k, p)


@dataclass(frozen=True, eq=False)
class LegendreCoefficients:
    """Evaluator for k_0..k_J of a kernel; ``table`` holds values on the extraction grid."""
    kernel: object
    J: int
    order: int
    sigma: np.ndarray = None
    rho: np.ndarray = None
    table: np.ndarray = None
    adaptive: bool = True

    @property
    def source(self):
        return self.kernel.name

    def __call__(self, sigma, rho):
        """Array of shape (J + 1,) + broadcast shape of (sigma, rho)."""
        if self.adaptive:
            return _project_adaptive(self.kernel, self.J, self.order, sigma, rho)[0]
        return _project(self.kernel, self.J, self.order, sigma, rho)

    def rows(self):
        """CSV rows (j, sigma, rho, k_j) over the extraction grid."""
        out = []
        for j in range(self.J + 1):
            for a, s in enumerate(self.sigma):
                for b, r in enumerate(self.rho):
                    out.append((j, float(s), float(r), float(self.table[j, a, b])))
        return out


def _project(K, J, order, sigma, rho):
    x, w = gauss_legendre_nodes(order)
    sigma, rho = np.broadcast_arrays(np.asarray(sigma, dtype=float), np.asarray(rho, dtype=float))
    vals = radial_values(K, sigma[..., None], rho[..., None], x)
    basis = legendre_all(J, x) * (w * 1.0)[None, :] * (np.arange(J + 1) + 0.5)[:, None]
    return np.moveaxis(np.tensordot(vals, basis, axes=([-1], [1])), -1, 0)


def _project_adaptive(K, J, order, sigma, rho, tol=1e-13, cap=2048):
    """Double the quadrature order from ``order`` until two successive projections agree."""
    prev = _project(K, J, order, sigma, rho)
    while order < cap:
        cur = _project(K, J, 2 * order, sigma, rho)
        if np.max(np.abs(cur - prev), initial=0.0) <= tol:
            # the lower order is already converged and carries less roundoff
            return prev, order
        prev, order = cur, 2 * order
    return prev, order


def rotation_residual(K, rng=None, samples=4):
    """Largest change of K under random simultaneous rotations of random pairs."""
    rng = np.random.default_rng(12345) if rng is None else rng
    worst = 0.0
    for _ in range(samples):
        k, p = rng.normal(size=3) * 2, rng.normal(size=3) * 2
        R = random_rotation(rng)
        worst = max(worst, float(abs(K(k, p) - K(R @ k, R @ p))))
    return worst


def extract_coefficients(K, J, sigma=None, rho=None, order=None, check=True):
    """Gauss-Legendre projection k_j = int k(sigma, rho, x) (j + 1/2) P_j(x) dx for j <= J.

    Without an explicit order the rule starts at 2J + 16 nodes and doubles until stable.
    """
    if J < 0:
        raise ValueError("J must be nonnegative")
    adaptive = order is None
    order = 2 * J + 16 if order is None else int(order)
    if order < 2 * J:
        raise ValueError("quadrature order must be at least 2J")
    if check:
        res = rotation_residual(K)
        if res > 1e-8:
            raise ValueError(f"kernel is not rotation invariant (residual {res:.2e})")
    table = None
    if sigma is not None:
        sigma = np.atleast_1d(np.asarray(sigma, dtype=float))
        rho = sigma if rho is None else np.atleast_1d(np.asarray(rho, dtype=float))
        if adaptive:
            table, _ = _project_adaptive(K, J, order, sigma[:, None], rho[None, :])
        else:
            table = _project(K, J, order, sigma[:, None], rho[None, :])
    return LegendreCoefficients(K, J, order, sigma, rho, table, adaptive)


def reconstruct(coeffs, sigma, rho, x):
    """Partial sum sum_{j<=J} k_j(sigma, rho) P_j(x)."""
    kj = coeffs(sigma, rho)
    pj = legendre_all(coeffs.J, x)
    return np.sum(kj * pj, axis=0)


def reconstruction_error(coeffs, sigma, rho, x):
    return np.abs(reconstruct(coeffs, sigma, rho, x) - radial_values(coeffs.kernel, sigma, rho, x))


def tail_bound(coeffs, rho):
    """Diagonal normalization deficit 1 - sum_{j<=J} k_j(rho, rho)."""
    return 1.0 - np.sum(coeffs(rho, rho), axis=0)


def adaptive_order(K, rho, tol=TAIL_TOL, jmax=J_MAX):
    """Smallest J with tail_bound < tol (capped at jmax), and the diagonal partial sums."""
    kj, _ = _project_adaptive(K, jmax, 2 * jmax + 16, rho, rho)
    partial = np.cumsum(kj)
    hits = np.nonzero(1.0 - partial < tol)[0]
    J = int(hits[0]) if hits.size else jmax
    return J, partial


def half_profile_coefficient(j, sigma, rho, m=1.0):
    """Closed-form coefficients of the Lorentz kernel of g_{1/2}: a rank-one product."""
    def factor(r):
        r = np.asarray(r, dtype=float) / m
        return np.sqrt(2.0) * r ** j / (1.0 + np.sqrt(1 + r * r)) ** (j + 0.5)
    return factor(sigma) * factor(rho)


def power_zeroth_coefficient(r, sigma, rho, prefactor=True):
    """Closed-form k_0 of the power kernel (with or without the energy prefactor), mass 1."""
    sigma, rho = np.asarray(sigma, dtype=float), np.asarray(rho, dtype=float)
    es, er = np.sqrt(1 + sigma ** 2), np.sqrt(1 + rho ** 2)
    a, b = 1.0 + es * er, sigma * rho
    if r == 1:
        gamma = np.log((a + b) / (a - b)) / b
    else:
        gamma = 2.0 ** (r - 1) / (1 - r) / b * ((a + b) ** (1 - r) - (a - b) ** (1 - r))
    if prefactor:
        gamma = gamma * (es + er) / (2 * np.sqrt(es * er))
    return gamma
