"""Kernel families: Newton-Wigner, Terno-Moretti, trace kernel, causal profile kernels."""
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .specfun import (arccosh1p, energy, legendre_p, minkowski_excess,
                      minkowski_excess_radial, sinhc_ratio)

DENSITY_LAMBDA_MAX = 12.0
DENSITY_POINTS = 2048


# ---------------------------------------------------------------- profiles

@dataclass(frozen=True, eq=False)
class RadialProfile:
    """Normalized profile g on [m^2, inf), stored in unit form g1(u) with t = m^2 (1 + u).

    ``psi`` (optional) gives d/dx (sinh x g1(cosh x - 1)) in closed form.
    """
    label: str
    unit: Callable
    mass: float = 1.0
    psi: Optional[Callable] = None
    spec: dict = field(default_factory=dict)

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        m2 = self.mass * self.mass
        if np.any(t < m2 * (1 - 1e-12)):
            raise ValueError("profile argument below m^2")
        return self.unit(np.maximum(t / m2 - 1.0, 0.0))

    def of_excess(self, u):
        """g at t = m^2 + u."""
        return self.unit(np.asarray(u, dtype=float) / (self.mass * self.mass))

    def of_rapidity(self, kappa):
        """g(m^2 cosh kappa)."""
        kappa = np.asarray(kappa, dtype=float)
        return self.unit(2.0 * np.sinh(0.5 * kappa) ** 2)

    def with_mass(self, m):
        return RadialProfile(self.label, self.unit, float(m), self.psi, dict(self.spec, m=float(m)))


def _kappa(u):
    return arccosh1p(u)


def profile_power(r, m=1.0):
    """g_r(t) = (2 m^2)^r (m^2 + t)^(-r)."""
    if r <= 0:
        raise ValueError("power profile needs r > 0")
    r = float(r)

    def unit(u):
        return (2.0 / (2.0 + u)) ** r

    def psi(x):
        c = np.cosh(x)
        return unit(c - 1.0) * ((1.0 - r) * c + r)

    return RadialProfile(f"power_r{r:g}", unit, float(m), psi, {"kind": "power", "r": r})


def profile_irreducible(kind, lam, m=1.0):
    """Principal sin(lam kappa)/(lam sinh kappa) or supplementary sinh(lam kappa)/(lam sinh kappa)."""
    lam = float(lam)
    if kind == "principal":
        if lam < 0:
            raise ValueError("principal series needs lambda >= 0")
        psi = (lambda x: np.cos(lam * np.asarray(x, dtype=float)))
    elif kind == "supplementary":
        if not 0 <= lam <= 1:
            raise ValueError("supplementary series needs 0 <= lambda <= 1")
        psi = (lambda x: np.cosh(lam * np.asarray(x, dtype=float)))
    else:
        raise ValueError(f"unknown irreducible kind {kind!r}")

    def unit(u):
        return sinhc_ratio(lam, _kappa(u), kind)

    return RadialProfile(f"{kind}{lam:g}", unit, float(m), psi, {"kind": kind, "lambda": lam})


def profile_gaussian(varsigma, m=1.0):
    """g = k o arccosh with k(x) = exp(-x^2 / (2 varsigma^2))."""
    s = float(varsigma)
    if s <= 0:
        raise ValueError("gaussian profile needs varsigma > 0")

    def unit(u):
        return np.exp(-_kappa(u) ** 2 / (2 * s * s))

    return RadialProfile(f"gaussian{s:g}", unit, float(m), None, {"kind": "gaussian", "varsigma": s})


def profile_custom(fn, label="custom", m=1.0, psi=None):
    """Profile from a callable of t (evaluated at mass 1 and rescaled)."""
    def unit(u):
        return np.asarray(fn(1.0 + np.asarray(u, dtype=float)), dtype=float)

    return RadialProfile(label, unit, float(m), psi, {"kind": "custom", "label": label})


def profile_product(f, g):
    if f.mass != g.mass:
        raise ValueError("profiles with different masses")
    psi = None
    return RadialProfile(f"{f.label}*{g.label}", lambda u: f.unit(u) * g.unit(u), f.mass, psi,
                         {"kind": "product", "factors": [f.spec, g.spec]})


@dataclass(frozen=True)
class MixtureSpec:
    """Atoms of the principal and supplementary measures plus an optional principal density."""
    principal: tuple = ()
    supplementary: tuple = ()
    density: Optional[tuple] = None  # (lambda grid, values)

    def total_weight(self):
        total = sum(w for _, w in self.principal) + sum(w for _, w in self.supplementary)
        if self.density is not None:
            lam, w = self.density
            total += np.trapezoid(w, lam)
        return total


def density_grid(fn, lam_max=DENSITY_LAMBDA_MAX, points=DENSITY_POINTS):
    lam = np.linspace(0.0, lam_max, points)
    return lam, np.asarray(fn(lam), dtype=float)


def profile_mixture(spec, m=1.0):
    """g = sum of irreducible profiles weighted by the mixture, density part by trapezoid rule."""
    for lam, w in spec.principal:
        if lam < 0 or w <= 0:
            raise ValueError("principal atoms need lambda >= 0 and weight > 0")
    for lam, w in spec.supplementary:
        if not 0 < lam <= 1 or w <= 0:
            raise ValueError("supplementary atoms need 0 < lambda <= 1 and weight > 0")
    tol = 1e-12 if spec.density is None else 1e-6
    if abs(spec.total_weight() - 1.0) > tol:
        raise ValueError(f"mixture weights sum to {spec.total_weight()!r}, not 1")
    atoms = [(profile_irreducible("principal", lam), w) for lam, w in spec.principal]
    atoms += [(profile_irreducible("supplementary", lam), w) for lam, w in spec.supplementary]
    if spec.density is not None:
        lam_grid = np.asarray(spec.density[0], dtype=float)
        dens = np.asarray(spec.density[1], dtype=float)
        tw = np.full(lam_grid.size, lam_grid[1] - lam_grid[0]) * dens
        tw[0] *= 0.5
        tw[-1] *= 0.5
    else:
        lam_grid = dens = tw = None

    def unit(u):
        u = np.asarray(u, dtype=float)
        out = np.zeros(u.shape)
        for prof, w in atoms:
            out = out + w * prof.unit(u)
        if lam_grid is not None:
            kap = _kappa(u).ravel()
            vals = np.empty(kap.size)
            for i in range(0, kap.size, 512):
                block = sinhc_ratio(lam_grid[None, :], kap[i:i + 512, None], "principal")
                vals[i:i + 512] = block @ tw
            out = out + vals.reshape(u.shape)
        return out

    def psi(x):
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape)
        for prof, w in atoms:
            out = out + w * prof.psi(x)
        if lam_grid is not None:
            flat = x.ravel()
            vals = np.empty(flat.size)
            for i in range(0, flat.size, 512):
                vals[i:i + 512] = np.cos(flat[i:i + 512, None] * lam_grid[None, :]) @ tw
            out = out + vals.reshape(x.shape)
        return out

    spec_json = {"kind": "mixture",
                 "principal": [list(map(float, a)) for a in spec.principal],
                 "supplementary": [list(map(float, a)) for a in spec.supplementary]}
    if spec.density is not None:
        spec_json["density_grid"] = np.column_stack([lam_grid, dens]).tolist()
    return RadialProfile("mixture", unit, float(m), psi, spec_json)


# ----------------------------------------------------------------- kernels

@dataclass(frozen=True, eq=False)
class CurrentKernel:
    """Three Hermitian companion kernels j_i(k, p), returned stacked on the last axis."""
    fn: Callable
    covariant_zero: Optional[Callable] = None

    def __call__(self, k, p):
        return self.fn(np.asarray(k, dtype=float), np.asarray(p, dtype=float))


@dataclass(frozen=True, eq=False)
class Kernel:
    """Rotation-invariant kernel on R^3 given through its radial form k(sigma, rho, x).

    ``vector`` optionally evaluates K(k, p) directly from momenta (more accurate near k = p).
    ``factors`` lists, per Legendre order j, functions e_jn with k_j(s, r) = sum_n e_jn(s) e_jn(r);
    present only for finite kernels.
    """
    name: str
    symmetry: str
    radial: Callable
    mass: float = 1.0
    vector: Optional[Callable] = None
    profile: Optional[RadialProfile] = None
    current: Optional[CurrentKernel] = None
    factors: Optional[tuple] = None
    spec: dict = field(default_factory=dict)
    allow_origin: bool = True

    def __call__(self, k, p):
        k = np.asarray(k, dtype=float)
        p = np.asarray(p, dtype=float)
        if self.vector is not None:
            return self.vector(k, p)
        a = np.linalg.norm(k, axis=-1)
        b = np.linalg.norm(p, axis=-1)
        if not self.allow_origin and (np.any(a == 0) or np.any(b == 0)):
            raise ValueError("kernel undefined at the origin")
        with np.errstate(invalid="ignore", divide="ignore"):
            x = np.sum(k * p, axis=-1) / (a * b)
        x = np.where((a == 0) | (b == 0), 1.0, np.clip(x, -1.0, 1.0))
        return self.radial(a, b, x)

    def energy(self, p):
        return energy(p, self.mass)


def _prefactor(ek, ep):
    return (ek + ep) / (2.0 * np.sqrt(ek * ep))


def kernel_nwl(m=1.0):
    """Newton-Wigner kernel, identically 1."""
    def radial(s, r, x):
        return np.ones(np.broadcast(np.asarray(s), np.asarray(r), np.asarray(x)).shape)

    def vector(k, p):
        return np.ones(np.broadcast_shapes(k.shape, p.shape)[:-1])

    one = lambda r: np.ones(np.shape(r))
    zero_current = CurrentKernel(lambda k, p: np.zeros(np.broadcast_shapes(k.shape, p.shape)))
    return Kernel("nwl", "finite_sum", radial, float(m), vector, None, zero_current, ((one,),),
                  {"family": "nwl", "m": float(m)})


def kernel_terno_moretti(m=1.0):
    """1/2 (1 + (m^2 + k.p)/(eps(k) eps(p))) with current (eps(p) k + eps(k) p)/(2 eps(k) eps(p))."""
    m = float(m)

    def radial(s, r, x):
        es, er = np.sqrt(m * m + s * s), np.sqrt(m * m + r * r)
        return 0.5 * (1.0 + (m * m + s * r * x) / (es * er))

    def vector(k, p):
        ek, ep = energy(k, m), energy(p, m)
        return 0.5 * (1.0 + (m * m + np.sum(k * p, axis=-1)) / (ek * ep))

    def current(k, p):
        ek, ep = energy(k, m)[..., None], energy(p, m)[..., None]
        return (ep * k + ek * p) / (2.0 * ek * ep)

    c = 1.0 / np.sqrt(2.0)
    factors = ((lambda r: np.full(np.shape(r), c), lambda r: c * m / np.sqrt(m * m + np.square(r))),
               (lambda r: c * np.asarray(r) / np.sqrt(m * m + np.square(r)),))
    return Kernel("terno_moretti", "finite_sum", radial, m, vector, None, CurrentKernel(current),
                  factors, {"family": "terno_moretti", "m": m})


def kernel_tct(m=1.0):
    """Trace kernel 1/2 (eps_k (m + eps_k) eps_p (m + eps_p))^(-1/2) ((m + eps_k)(m + eps_p) + k.p)."""
    m = float(m)

    def core(es, er, dot):
        return 0.5 * ((m + es) * (m + er) + dot) / np.sqrt(es * (m + es) * er * (m + er))

    def radial(s, r, x):
        return core(np.sqrt(m * m + s * s), np.sqrt(m * m + r * r), s * r * x)

    def vector(k, p):
        return core(energy(k, m), energy(p, m), np.sum(k * p, axis=-1))

    def e0(r):
        e = np.sqrt(m * m + np.square(r))
        return np.sqrt((m + e) / (2 * e))

    def e1(r):
        e = np.sqrt(m * m + np.square(r))
        return np.asarray(r) / np.sqrt(2 * e * (m + e))

    return Kernel("tct", "finite_sum", radial, m, vector, None, None, ((e0,), (e1,)),
                  {"family": "tct", "m": m})


def kernel_causal(profile):
    """Energy-prefactor kernel (eps_k + eps_p)/(2 sqrt(eps_k eps_p)) g(k.p) with covariant current."""
    m = profile.mass

    def radial(s, r, x):
        es, er = np.sqrt(m * m + np.square(s)), np.sqrt(m * m + np.square(r))
        return _prefactor(es, er) * profile.of_excess(minkowski_excess_radial(s, r, x, m))

    def vector(k, p):
        return _prefactor(energy(k, m), energy(p, m)) * profile.of_excess(minkowski_excess(k, p, m))

    current = covariant_current_decompose(profile)
    return Kernel(f"causal[{profile.label}]", "energy_prefactor_profile", radial, m, vector,
                  profile, current, None, {"family": "causal", "m": m, "profile": profile.spec})


def kernel_power(r, m=1.0):
    """K_r, the causal kernel of the power profile g_r."""
    return kernel_causal(profile_power(r, m))


def kernel_lorentz(profile):
    """Lorentz-invariant kernel g(eps_k eps_p - k.p) without energy prefactor."""
    m = profile.mass

    def radial(s, r, x):
        return profile.of_excess(minkowski_excess_radial(s, r, x, m))

    def vector(k, p):
        return profile.of_excess(minkowski_excess(k, p, m))

    return Kernel(f"lorentz[{profile.label}]", "lorentz_invariant_profile", radial, m, vector,
                  profile, None, None, {"family": "lorentz", "m": m, "profile": profile.spec})


def covariant_current_decompose(profile):
    """Momentum-normalized spatial part of v(k, p) = g(k.p)(k + p)/2 on the mass shell."""
    m = profile.mass

    def fn(k, p):
        g = profile.of_excess(minkowski_excess(k, p, m))
        scale = g / (2.0 * np.sqrt(energy(k, m) * energy(p, m)))
        return scale[..., None] * (k + p)

    def zero(k, p):
        g = profile.of_excess(minkowski_excess(k, p, m))
        ek, ep = energy(k, m), energy(p, m)
        return g * (ek + ep) / (2.0 * np.sqrt(ek * ep))

    return CurrentKernel(fn, zero)


def kernel_from_coefficients(coeffs, J=None, factors=None, check_grid=None, name="coefficients"):
    """K(k, p) = sum_{j<=J} k_j(|k|, |p|) P_j(cos angle); undefined at the origin."""
    coeffs = list(coeffs)
    if J is None:
        J = len(coeffs) - 1
    coeffs = coeffs[:J + 1]
    grid = np.geomspace(1e-2, 1e2, 25) if check_grid is None else np.asarray(check_grid, dtype=float)
    diag = sum(np.asarray(c(grid, grid), dtype=float) for c in coeffs)
    if np.any(diag > 1 + 1e-9):
        raise ValueError(f"diagonal coefficient sum exceeds 1 (max {diag.max():.3e})")

    def radial(s, r, x):
        s, r = np.asarray(s, dtype=float), np.asarray(r, dtype=float)
        if np.any(s <= 0) or np.any(r <= 0):
            raise ValueError("kernel undefined at the origin")
        return sum(c(s, r) * legendre_p(j, x) for j, c in enumerate(coeffs))

    return Kernel(name, "finite_sum" if factors is not None else "rotation_invariant", radial,
                  1.0, None, None, None, factors, {"family": "coefficients", "J": J},
                  allow_origin=False)


def kernel_to_shell(K):
    """Shell normalization sqrt(eps_k eps_p) K(k, p)."""
    m = K.mass

    def radial(s, r, x):
        return np.sqrt(np.sqrt(m * m + np.square(s)) * np.sqrt(m * m + np.square(r))) * K.radial(s, r, x)

    def vector(k, p):
        return np.sqrt(energy(k, m) * energy(p, m)) * K(k, p)

    return Kernel(f"shell[{K.name}]", "shell", radial, m, vector, K.profile, None, None,
                  {"family": "shell", "of": K.spec}, K.allow_origin)


def kernel_product(K, G):
    """Pointwise product of two kernels."""
    if K.mass != G.mass:
        raise ValueError("kernels with different masses")

    def radial(s, r, x):
        return K.radial(s, r, x) * G.radial(s, r, x)

    def vector(k, p):
        return K(k, p) * G(k, p)

    return Kernel(f"{K.name}*{G.name}", "product", radial, K.mass, vector, None, None, None,
                  {"family": "product", "m": K.mass, "factors": [K.spec, G.spec]},
                  K.allow_origin and G.allow_origin)


# ------------------------------------------------------------ json specs

def profile_from_spec(spec, m=1.0):
    kind = spec.get("kind") or spec.get("profile")
    if kind == "power":
        return profile_power(spec["r"], m)
    if kind in ("principal", "supplementary"):
        return profile_irreducible(kind, spec["lambda"], m)
    if kind == "gaussian":
        return profile_gaussian(spec["varsigma"], m)
    if kind == "mixture":
        density = None
        if spec.get("density_grid"):
            arr = np.asarray(spec["density_grid"], dtype=float)
            density = (arr[:, 0], arr[:, 1])
        mix = MixtureSpec(tuple(tuple(a) for a in spec.get("principal", ())),
                          tuple(tuple(a) for a in spec.get("supplementary", ())), density)
        return profile_mixture(mix, m)
    if kind == "product":
        a, b = (profile_from_spec(f, m) for f in spec["factors"])
        return profile_product(a, b)
    raise ValueError(f"unknown profile kind {kind!r}")


def kernel_from_spec(spec):
    """Build a kernel from {family, m, parameters, mixture} JSON."""
    if not isinstance(spec, dict) or "family" not in spec:
        raise ValueError("kernel spec needs a 'family' field")
    family = spec["family"]
    m = float(spec.get("m", 1.0))
    if m <= 0:
        raise ValueError("mass must be positive")
    params = dict(spec.get("parameters") or {})
    if spec.get("mixture"):
        params = dict(spec["mixture"], kind="mixture")
    elif "profile" in spec and isinstance(spec["profile"], dict):
        params = spec["profile"]
    if family == "nwl":
        return kernel_nwl(m)
    if family == "terno_moretti":
        return kernel_terno_moretti(m)
    if family == "tct":
        return kernel_tct(m)
    if family == "causal":
        return kernel_causal(profile_from_spec(params, m))
    if family == "lorentz":
        return kernel_lorentz(profile_from_spec(params, m))
    if family == "product":
        a, b = (kernel_from_spec(f) for f in spec["factors"])
        return kernel_product(a, b)
    raise ValueError(f"unknown kernel family {family!r}")
