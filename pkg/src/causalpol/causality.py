"""Necessary condition NC, maximality of K_{3/2}, and conserved / timelike-definite currents."""
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.integrate import IntegrationWarning, quad

from .kernels import kernel_power
from .specfun import energy, minkowski_excess, rapidity_of_momentum

MODES = ("profile_only", "with_prefactor")


@dataclass(frozen=True, eq=False)
class NcReport:
    rho: np.ndarray
    lhs: np.ndarray
    rhs: np.ndarray
    mode: str
    label: str = ""

    @property
    def margin(self):
        return self.rhs - self.lhs

    @property
    def worst(self):
        i = int(np.argmin(self.margin))
        return float(self.rho[i]), float(self.margin[i])

    def rows(self):
        return list(zip(self.rho.tolist(), self.lhs.tolist(), self.rhs.tolist(), self.margin.tolist()))

    def to_json(self):
        rho, margin = self.worst
        return {"label": self.label, "mode": self.mode, "worst_rho": rho, "worst_margin": margin,
                "max_abs_margin": float(np.max(np.abs(self.margin)))}


def nc_radial_average(profile, rho):
    """(1/(2 rho^2)) int_1^{1 + 2 rho^2} g(t) dt in mass units, via t = cosh x."""
    top = 2.0 * rapidity_of_momentum(rho)
    with warnings.catch_warnings():
        # the requested accuracy is at the roundoff floor; quad reports that but the value is fine
        warnings.simplefilter("ignore", IntegrationWarning)
        val, err = quad(lambda x: profile.of_rapidity(x) * np.sinh(x), 0.0, top,
                        epsabs=1e-15, epsrel=1e-13, limit=400)
    if not np.isfinite(val):
        raise ArithmeticError(f"integration failed at rho={rho}")
    return val / (2.0 * rho * rho)


def nc_check(profile, mode="with_prefactor", rho=None):
    """Both sides of NC on a radial grid; margin = RS - LS must be >= 0 for causal profiles."""
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    rho = np.geomspace(0.05, 50, 50) if rho is None else np.atleast_1d(np.asarray(rho, dtype=float))
    eps = np.sqrt(1 + rho * rho)
    g_eps = profile.of_rapidity(np.arccosh(eps))
    lhs = g_eps ** 2
    if mode == "with_prefactor":
        lhs = lhs * (1 + eps) ** 2 / (4 * eps)
    rhs = np.array([nc_radial_average(profile, r) for r in rho])
    return NcReport(rho, lhs, rhs, mode, profile.label)


def nc_irreducible_identity(kind, lam, rho=None):
    """Compare the NC radial average of an irreducible profile with its closed form."""
    from .kernels import profile_irreducible
    prof = profile_irreducible(kind, lam)
    rho = np.geomspace(0.05, 50, 20) if rho is None else np.atleast_1d(np.asarray(rho, dtype=float))
    l = rapidity_of_momentum(rho)
    if lam == 0:
        closed = (l / rho) ** 2
    elif kind == "principal":
        closed = (np.sin(lam * l) / (lam * rho)) ** 2
    else:
        closed = (np.sinh(lam * l) / (lam * rho)) ** 2
    quad_rhs = np.array([nc_radial_average(prof, r) for r in rho])
    eps = np.sqrt(1 + rho * rho)
    g_eps = prof.of_rapidity(np.arccosh(eps))
    prefactor = (1 + eps) ** 2 / (4 * eps)
    with np.errstate(invalid="ignore", divide="ignore"):
        ratio = np.where(closed > 1e-300, prefactor * g_eps ** 2 / closed, np.nan)
    return {"kind": kind, "lambda": float(lam), "rho": rho, "rhs_quadrature": quad_rhs,
            "rhs_closed": closed, "max_abs_diff": float(np.max(np.abs(quad_rhs - closed))),
            "profile_only_margin": quad_rhs - g_eps ** 2, "prefactor_ratio": ratio,
            "prefactor": prefactor}


def sample_pairs(n, seed=0, box=20.0, r_max=1e3):
    """Half uniform in the ball |p| <= box, half log-radial with radii in [1e-2, r_max]."""
    rng = np.random.default_rng(seed)
    half = n // 2

    def directions(size):
        v = rng.standard_normal((size, 3))
        return v / np.linalg.norm(v, axis=1, keepdims=True)

    def uniform(size):
        return directions(size) * (box * rng.random(size) ** (1 / 3))[:, None]

    def logradial(size):
        return directions(size) * (10 ** rng.uniform(-2, np.log10(r_max), size))[:, None]

    k = np.vstack([uniform(half), logradial(n - half)])
    p = np.vstack([uniform(half), logradial(n - half)])
    return k, p


def maximality_check(K, pairs=None, strict=True, n=100_000, seed=0):
    """|K| <= K_{3/2} + 1e-12 on sampled pairs; strictly below it for k != p when strict."""
    if K.symmetry not in ("energy_prefactor_profile", "product"):
        warnings.warn(f"{K.name} is not a causal-family kernel; maximality is not expected")
    k, p = sample_pairs(n, seed) if pairs is None else map(np.asarray, pairs)
    ref = kernel_power(1.5, K.mass)(k, p)
    val = np.abs(K(k, p))
    excess = val - ref
    distinct = np.any(k != p, axis=1)
    margin = (ref - val)[distinct]
    ok = bool(np.max(excess) <= 1e-12)
    strict_ok = bool(np.all(margin > 0)) if strict else None
    if strict and ok and not strict_ok:
        ok = False
    return {"kernel": K.name, "pairs": int(len(k)), "max_excess": float(np.max(excess)),
            "min_margin": float(np.min(margin)) if margin.size else None,
            "non_strict_count": int(np.sum(margin <= 0)), "strict": strict, "pass": ok}


def conserved_check(K, pairs=None, n=1000, seed=0, box=10.0):
    """max |(eps(k) - eps(p)) K(k, p) - sum_i (k_i - p_i) j_i(k, p)| over sampled pairs."""
    if K.current is None:
        raise ValueError(f"{K.name} has no attached current")
    if pairs is None:
        rng = np.random.default_rng(seed)
        k = rng.uniform(-box, box, (n, 3))
        p = rng.uniform(-box, box, (n, 3))
    else:
        k, p = map(np.asarray, pairs)
    res = (energy(k, K.mass) - energy(p, K.mass)) * K(k, p) - np.sum((k - p) * K.current(k, p), axis=-1)
    return float(np.max(np.abs(res)))


def timelike_definite_check(K, n=5, seeds=range(200), box=5.0, complex_coefficients=True):
    """Worst (c*Kc)^2 - sum_i (c*J_i c)^2 over seeded points and unit coefficient vectors."""
    if K.current is None:
        raise ValueError(f"{K.name} has no attached current")
    worst = np.inf
    for seed in seeds:
        rng = np.random.default_rng(seed)
        pts = rng.uniform(-box, box, (n, 3))
        c = rng.standard_normal(n)
        if complex_coefficients:
            c = c + 1j * rng.standard_normal(n)
        c = c / np.linalg.norm(c)
        a, b = pts[:, None, :], pts[None, :, :]
        z0 = np.real(np.conj(c) @ K(a, b) @ c)
        J = K.current(a, b)
        zi = np.array([np.real(np.conj(c) @ J[..., i] @ c) for i in range(3)])
        worst = min(worst, float(z0 * z0 - np.sum(zi * zi)))
    return worst


def four_current(profile, k, p):
    """v(k, p) = g(k.p)(k + p)/2 as an on-shell four-vector (time component first)."""
    m = profile.mass
    g = profile.of_excess(minkowski_excess(k, p, m))
    k4 = np.concatenate([energy(k, m)[..., None], k], axis=-1)
    p4 = np.concatenate([energy(p, m)[..., None], p], axis=-1)
    return 0.5 * g[..., None] * (k4 + p4)


def boost_four_vector(v, axis, eta):
    out = np.array(v, dtype=float, copy=True)
    t, s = v[..., 0], v[..., axis + 1]
    out[..., 0] = np.cosh(eta) * t + np.sinh(eta) * s
    out[..., axis + 1] = np.sinh(eta) * t + np.cosh(eta) * s
    return out


def minkowski_dot(a, b):
    return a[..., 0] * b[..., 0] - np.sum(a[..., 1:] * b[..., 1:], axis=-1)
