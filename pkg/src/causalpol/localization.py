"""Localization probabilities <phi, T(B) phi> for balls, time evolution, CT margins, PLSS, norm bounds."""
import json
import math
from dataclasses import dataclass, field, replace
from importlib import resources
from typing import Callable, Optional

import numpy as np
from scipy.linalg import eigh
from scipy.special import ndtri, spherical_jn
from scipy.stats import qmc

from .specfun import energy, gauss_legendre_interval, gauss_legendre_nodes, legendre_all

ENVELOPE_CUT = 9.0   # the amplitude ~ exp(-(rho/S)^2 / 2) is below 3e-18 beyond this many envelope scales
MAX_ZONAL = 16


# ---------------------------------------------------------------- regions and states

def ball_form_factor(q, R):
    """int_{|x| <= R} exp(i q.x) d^3x = 4 pi (sin qR - qR cos qR)/q^3."""
    q = np.asarray(q, dtype=float)
    if np.any(q < 0):
        raise ValueError("q must be nonnegative")
    x = q * R
    small = x < 0.5
    xs = np.where(small, x, 0.0)
    # (sin x - x cos x)/x^3 = sum_k (-1)^(k+1) 2k x^(2k-2)/(2k+1)!, summed from the small end
    series = np.zeros_like(xs)
    for k in range(10, 0, -1):
        series = series + (-1) ** (k + 1) * 2 * k / math.factorial(2 * k + 1) * xs ** (2 * k - 2)
    xl = np.where(small, 1.0, x)
    direct = (np.sin(xl) - xl * np.cos(xl)) / xl ** 3
    return 4 * np.pi * R ** 3 * np.where(small, series, direct)


@dataclass(frozen=True)
class BallRegion:
    center: tuple = (0.0, 0.0, 0.0)
    radius: float = 1.0

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError("ball radius must be positive")
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))

    def grown(self, t):
        return BallRegion(self.center, self.radius + abs(t))

    def scaled(self, m):
        return BallRegion(tuple(m * c for c in self.center), m * self.radius)


@dataclass(frozen=True, eq=False)
class StateWavepacket:
    """phi(p) = exp(-i t eps(p)) exp(-i b.p) base(p), with ``base`` centred at the origin.

    ``zonal(rho, x)`` is the base amplitude as a function of |p| and the cosine to ``axis``;
    ``lmax`` bounds its Legendre content (0 for radial states).
    """
    family: str
    base: Callable
    envelope: float
    zonal: Optional[Callable] = None
    axis: tuple = (0.0, 0.0, 1.0)
    lmax: int = 0
    center: tuple = (0.0, 0.0, 0.0)
    time: float = 0.0
    mass: float = 1.0
    params: dict = field(default_factory=dict)

    def __call__(self, p):
        p = np.asarray(p, dtype=float)
        b = np.asarray(self.center)
        phase = np.exp(-1j * (self.time * energy(p, self.mass) + p @ b))
        return phase * self.base(p)

    def radial_phase(self, rho):
        return np.exp(-1j * self.time * np.sqrt(self.mass ** 2 + np.square(rho)))

    def components(self, rho, lmax=None, order=None):
        """u_l(rho), l <= lmax, with phi = sum_l u_l(|p|) P_l(cos angle to axis) (time phase included)."""
        if self.zonal is None:
            raise ValueError("state has no zonal form")
        lmax = self.lmax if lmax is None else lmax
        rho = np.asarray(rho, dtype=float)
        if lmax == 0 and self.params.get("radial", False):
            return (self.zonal(rho, 1.0) * self.radial_phase(rho))[None]
        order = order or 2 * lmax + 32
        x, w = gauss_legendre_nodes(order)
        vals = self.zonal(rho[..., None], x)
        basis = legendre_all(lmax, x) * w * (np.arange(lmax + 1) + 0.5)[:, None]
        u = np.moveaxis(np.tensordot(vals, basis, axes=([-1], [1])), -1, 0)
        return u * self.radial_phase(rho)


def _check_decay(base, envelope):
    dirs = np.eye(3)
    far = np.abs(base(ENVELOPE_CUT * envelope * dirs)) ** 2
    near = np.abs(base(0.25 * envelope * dirs)) ** 2
    if not np.all(np.isfinite(far)) or np.max(far) > 1e-10 * max(np.max(near), 1e-300):
        raise ValueError("amplitude does not decay on the stated envelope scale")


def gaussian_state(s, center=(0.0, 0.0, 0.0), m=1.0):
    """phi(p) = pi^(-3/4) s^(3/2) exp(-s^2 |p|^2 / 2) exp(-i b.p)."""
    s = float(s)
    if s <= 0:
        raise ValueError("width must be positive")
    c = np.pi ** -0.75 * s ** 1.5

    def zonal(rho, x):
        rho = np.asarray(rho, dtype=float)
        return c * np.exp(-0.5 * s * s * rho * rho) * np.ones(np.broadcast(rho, np.asarray(x)).shape)

    def base(p):
        return c * np.exp(-0.5 * s * s * np.sum(np.square(p), axis=-1)) + 0j

    return StateWavepacket("gaussian", base, 1.0 / s, zonal, lmax=0, center=tuple(center), mass=float(m),
                           params={"s": s, "radial": True})


def _zonal_norm2(zonal, envelope, lmax):
    rho, wr = gauss_legendre_interval(0.0, ENVELOPE_CUT * envelope, 16, 24)
    x, wx = gauss_legendre_nodes(2 * lmax + 64)
    vals = np.abs(zonal(rho[:, None], x[None, :])) ** 2
    return float(2 * np.pi * np.sum(wr * rho * rho * (vals @ wx)))


def plss_state(K, n, k0=(0.0, 0.0, 1.0), b=(0.0, 0.0, 0.0)):
    """phi_n(p) = c_n exp(-i b.p) exp(-|p|^2/n^2) K(k0, p)."""
    k0 = np.asarray(k0, dtype=float)
    a = float(np.linalg.norm(k0))
    if a == 0:
        raise ValueError("k0 must be nonzero")
    axis = k0 / a
    lmax = len(K.factors) - 1 if K.factors is not None else MAX_ZONAL
    envelope = n / np.sqrt(2.0)

    def raw_zonal(rho, x):
        return np.exp(-np.square(rho) / n ** 2) * K.radial(a, rho, x)

    norm2 = _zonal_norm2(raw_zonal, envelope, lmax)
    if not np.isfinite(norm2) or norm2 <= 0:
        raise ValueError("degenerate PLSS normalization")
    c = 1.0 / np.sqrt(norm2)

    def zonal(rho, x):
        return c * raw_zonal(rho, x) + 0j

    def base(p):
        return c * np.exp(-np.sum(np.square(p), axis=-1) / n ** 2) * K(k0, p) + 0j

    return StateWavepacket("plss", base, envelope, zonal, tuple(axis), lmax, tuple(b), 0.0, K.mass,
                           {"n": n, "k0": k0.tolist(), "kernel": K.name, "c_n": c})


def custom_state(fn, envelope, zonal=None, axis=(0.0, 0.0, 1.0), lmax=0, m=1.0, normalize=True):
    """State from an amplitude callable of p (shape (..., 3)); normalized numerically when asked."""
    _check_decay(fn, envelope)
    c = 1.0
    if normalize:
        c = 1.0 / np.sqrt(state_norm2(StateWavepacket("custom", fn, envelope, zonal, tuple(axis), lmax)))
    base = (lambda p: c * fn(p))
    z = None if zonal is None else (lambda rho, x: c * zonal(rho, x))
    return StateWavepacket("custom", base, float(envelope), z, tuple(axis), lmax, mass=float(m),
                           params={"radial": zonal is not None and lmax == 0})


def state_norm2(state):
    """int |phi|^2 d^3p by product quadrature in spherical coordinates."""
    if state.zonal is not None:
        return _zonal_norm2(state.zonal, state.envelope, state.lmax)
    rho, wr = gauss_legendre_interval(0.0, ENVELOPE_CUT * state.envelope, 16, 12)
    ct, wt = gauss_legendre_nodes(48)
    ph = np.linspace(0, 2 * np.pi, 64, endpoint=False)
    st = np.sqrt(1 - ct * ct)
    dirs = np.stack([st[:, None] * np.cos(ph), st[:, None] * np.sin(ph), np.broadcast_to(ct[:, None], (48, 64))],
                    axis=-1)
    vals = np.abs(state.base(rho[:, None, None, None] * dirs[None])) ** 2
    return float(np.sum(wr * rho * rho * ((vals.sum(axis=-1) * (2 * np.pi / 64)) @ wt)))


def evolve(state, t):
    """phi_t(p) = exp(-i t eps(p)) phi(p)."""
    return replace(state, time=state.time + float(t))


def translate(state, b):
    return replace(state, center=tuple(np.asarray(state.center) + np.asarray(b, dtype=float)))


def rotate(state, R):
    R = np.asarray(R, dtype=float)
    base = state.base
    return replace(state, base=lambda p: base(np.asarray(p) @ R), axis=tuple(R @ np.asarray(state.axis)),
                   center=tuple(R @ np.asarray(state.center)))


def dilate(state, m):
    """(D_m phi)(p) = m^(3/2) phi(m p); the time phase is carried over at the rescaled mass."""
    m = float(m)
    base, zonal = state.base, state.zonal
    z = None if zonal is None else (lambda rho, x: m ** 1.5 * zonal(m * np.asarray(rho), x))
    return replace(state, base=lambda p: m ** 1.5 * base(m * np.asarray(p)), zonal=z,
                   envelope=state.envelope / m, center=tuple(m * np.asarray(state.center)),
                   time=state.time * m, mass=state.mass / m)


# ---------------------------------------------------------------- quadrature

@dataclass(frozen=True)
class Budget:
    """Quadrature budget; ``scale`` multiplies every node count (oracle runs use 4)."""
    panel_nodes: int = 8
    scale: float = 1.0
    refine: float = 1.5
    qmc_log2: int = 16
    qmc_randomizations: int = 16
    seed: int = 0

    def scaled(self, factor):
        return replace(self, scale=self.scale * factor)


@dataclass(frozen=True)
class LocalizationProbability:
    value: float
    error: float
    method: str
    detail: str = ""

    def to_json(self):
        return {"value": self.value, "error": self.error, "method": self.method, "detail": self.detail}


def _radial_nodes(sigma_max, freq, envelope, q, scale):
    width = min(envelope, 5.0 / max(freq, 1e-12))
    panels = max(2, int(np.ceil(scale * sigma_max / width)))
    return gauss_legendre_interval(0.0, sigma_max, q, panels)


def _angle_nodes(sigma_max, R, q, scale):
    panels = max(2, int(np.ceil(scale * (2.0 * sigma_max * R + 2 * sigma_max) / 12.0)))
    v, w = gauss_legendre_interval(0.0, 1.0, q, panels)
    return 1.0 - 2.0 * v * v, 4.0 * v * w, v


def angular_moments(K, R, sigma, lmax, q=12, scale=1.0, chunk_elems=3_000_000):
    """M_l(a, b) = int k(s_a, s_b, x) F_R(|p - k|) P_l(x) dx for l <= lmax (K real symmetric)."""
    sigma = np.asarray(sigma, dtype=float)
    x, wx, v = _angle_nodes(sigma.max(), R, q, scale)
    basis = legendre_all(lmax, x) * wx
    n = sigma.size
    out = np.empty((lmax + 1, n, n))
    rows = max(1, chunk_elems // (n * x.size))
    for i in range(0, n, rows):
        s = sigma[i:i + rows, None, None]
        r = sigma[None, i:, None]
        qq = np.sqrt((s - r) ** 2 + 4.0 * s * r * v * v)
        vals = K.radial(s, r, x) * ball_form_factor(qq, R)
        block = np.moveaxis(vals @ basis.T, -1, 0)
        out[:, i:i + rows, i:] = block
        out[:, i:, i:i + rows] = np.swapaxes(block, 1, 2)
    return out


def _tensor_value(K, state, ball, budget, level):
    S = state.envelope
    smax = ENVELOPE_CUT * S
    q = int(round(budget.panel_nodes * level))
    sigma, w = _radial_nodes(smax, ball.radius + abs(state.time), S, q, budget.scale)
    lmax = state.lmax
    u = state.components(sigma, lmax)
    M = angular_moments(K, ball.radius, sigma, lmax, q, budget.scale)
    ws = w * sigma * sigma
    total = 0.0
    for l in range(lmax + 1):
        a = ws * u[l]
        total += float(np.real(np.conj(a) @ M[l] @ a)) / (np.pi * (2 * l + 1))
    kept = sum(4 * np.pi / (2 * l + 1) * float(np.sum(w * sigma ** 2 * np.abs(u[l]) ** 2)) for l in range(lmax + 1))
    return total, kept


def gaunt_legendre(j, L, l):
    """int_{-1}^{1} P_j P_L P_l dx."""
    x, w = gauss_legendre_nodes((j + L + l) // 2 + 2)
    return float(np.sum(w * legendre_all(max(j, L, l), x)[j] * legendre_all(max(j, L, l), x)[L]
                        * legendre_all(max(j, L, l), x)[l]))


def _bessel_value(K, state, ball, budget, level):
    S = state.envelope
    smax = ENVELOPE_CUT * S
    R = ball.radius
    q = int(round(budget.panel_nodes * level))
    sigma, w = _radial_nodes(smax, R + abs(state.time), S, q, budget.scale)
    r_pan = max(2, int(np.ceil(budget.scale * R * smax / 5.0)))
    r, wr = gauss_legendre_interval(0.0, R, q, r_pan)
    u = state.components(sigma, state.lmax)
    ws = w * sigma * sigma
    jl_cache = {}
    total = 0.0
    for l in range(state.lmax + 1):
        if not np.any(u[l]):
            continue
        for j, fac in enumerate(K.factors):
            for L in range(abs(j - l), j + l + 1):
                if (j + L + l) % 2:
                    continue
                c = gaunt_legendre(j, L, l)
                if L not in jl_cache:
                    jl_cache[L] = spherical_jn(L, r[:, None] * sigma[None, :])
                for e in fac:
                    H = jl_cache[L] @ (ws * e(sigma) * u[l])
                    total += c * 4 * np.pi * (2 * L + 1) * float(np.sum(wr * r * r * np.abs(H) ** 2)) \
                        / (np.pi * (2 * l + 1))
    kept = sum(4 * np.pi / (2 * l + 1) * float(np.sum(w * sigma ** 2 * np.abs(u[l]) ** 2))
               for l in range(state.lmax + 1))
    return total, kept


def _deterministic(fn, K, state, ball, budget, detail):
    v1, _ = fn(K, state, ball, budget, 1.0)
    v2, kept = fn(K, state, ball, budget, budget.refine)
    # a truncated angular expansion loses at most 2 sqrt(deficit) of the probability
    deficit = max(0.0, 1.0 - kept)
    err = abs(v2 - v1) + 2 * np.sqrt(deficit) * (state.lmax > 0) + 1e-14
    return LocalizationProbability(v2, float(err), "tensor_quadrature", detail)


def _qmc(K, state, ball, budget):
    S = state.envelope
    c = np.asarray(ball.center)
    m = 2 ** budget.qmc_log2
    log_q_const = -1.5 * np.log(2 * np.pi * S * S)
    estimates = []
    for i in range(budget.qmc_randomizations):
        eng = qmc.Sobol(6, scramble=True, seed=np.random.default_rng([budget.seed, i]))
        z = ndtri(np.clip(eng.random_base2(budget.qmc_log2), 1e-300, 1 - 1e-16)) * S
        k, p = z[:, :3], z[:, 3:]
        logq = 2 * log_q_const - (np.sum(k * k, axis=1) + np.sum(p * p, axis=1)) / (2 * S * S)
        phase = np.exp(1j * ((p - k) @ c))
        f = K(k, p) * ball_form_factor(np.linalg.norm(p - k, axis=1), ball.radius) * phase \
            * np.conj(state(k)) * state(p) * np.exp(-logq)
        estimates.append(float(np.real(np.sum(f))) / m / (2 * np.pi) ** 3)
    estimates = np.array(estimates)
    se = float(np.std(estimates, ddof=1) / np.sqrt(len(estimates)))
    return LocalizationProbability(float(np.mean(estimates)), se, "quasi_monte_carlo",
                                   f"{len(estimates)}x2^{budget.qmc_log2}")


def probability(K, state, ball, method="auto", budget=None):
    """<phi, T(B) phi> = (2 pi)^-3 int int K(k, p) F_R(|p - k|) e^{i(p - k).c} conj(phi(k)) phi(p)."""
    budget = budget or Budget()
    concentric = np.allclose(ball.center, state.center, rtol=0, atol=1e-15)
    if method == "auto":
        if not concentric or state.zonal is None:
            method = "qmc"
        elif K.factors is not None and state.lmax <= len(K.factors) and \
                ENVELOPE_CUT * state.envelope * ball.radius > 40:
            method = "bessel"
        elif state.lmax > 0 and ENVELOPE_CUT * state.envelope * ball.radius > 120:
            method = "qmc"
        else:
            method = "tensor"
    if method == "qmc":
        return _qmc(K, state, ball, budget)
    if not concentric or state.zonal is None:
        raise ValueError("deterministic paths need an axisymmetric state concentric with the ball")
    centred = replace(state, center=(0.0, 0.0, 0.0))
    if method == "tensor":
        return _deterministic(_tensor_value, K, centred, replace(ball, center=(0.0, 0.0, 0.0)), budget, "angular")
    if method == "bessel":
        if K.factors is None:
            raise ValueError("the Bessel path needs a finite kernel")
        return _deterministic(_bessel_value, K, centred, replace(ball, center=(0.0, 0.0, 0.0)), budget, "bessel")
    raise ValueError(f"unknown method {method!r}")


def nwl_gaussian_oracle(s, R):
    """Position-space mass of the ball for the Gaussian state: erf(u) - 2u exp(-u^2)/sqrt(pi), u = R/s."""
    from scipy.special import erf
    u = R / s
    return float(erf(u) - 2 * u * np.exp(-u * u) / np.sqrt(np.pi))


# ---------------------------------------------------------------- causal time evolution

@dataclass(frozen=True)
class CtMargin:
    t: float
    grown: LocalizationProbability
    evolved: LocalizationProbability

    @property
    def margin(self):
        return self.grown.value - self.evolved.value

    @property
    def error(self):
        return self.grown.error + self.evolved.error

    def to_json(self):
        return {"t": self.t, "margin": self.margin, "error": self.error,
                "grown": self.grown.to_json(), "evolved": self.evolved.to_json()}


def ct_inequality(K, state, ball, t, method="auto", budget=None):
    """P(phi, B grown by |t|) - P(evolve(phi, -t), B); nonnegative up to error for causal kernels."""
    grown = probability(K, state, ball.grown(t), method, budget)
    evolved = probability(K, evolve(state, -t), ball, method, budget)
    return CtMargin(float(t), grown, evolved)


# ---------------------------------------------------------------- point-localized sequences

def plss_sequence(K, k0=(0.0, 0.0, 1.0), b=(0.0, 0.0, 0.0), ball=None, ns=(2, 4, 8, 16, 32),
                  method="auto", budget=None):
    ball = BallRegion(tuple(b), 2.0) if ball is None else ball
    return [(n, probability(K, plss_state(K, n, k0, b), ball, method, budget)) for n in ns]


def limit_tm(k, p, m=1.0):
    """lim_{lam -> inf} t_TM(k, lam p) = (1 + k.p/(eps(k)|p|))/2."""
    return 0.5 * (1 + np.sum(k * p, axis=-1) / (energy(k, m) * np.linalg.norm(p, axis=-1)))


def limit_tct(k, p, m=1.0):
    e = energy(k, m)
    return 0.5 * np.sqrt(1 + m / e) + np.sum(k * p, axis=-1) / (2 * np.linalg.norm(p, axis=-1)
                                                               * np.sqrt(e * (m + e)))


def limit_half(k, p, m=1.0):
    """lim K_{1/2}(k, lam p) = m (2 eps(k)(eps(k) - k.p/|p|))^(-1/2)."""
    e = energy(k, m)
    return m / np.sqrt(2 * e * (e - np.sum(k * p, axis=-1) / np.linalg.norm(p, axis=-1)))


def richardson_limit(K, k, p, lam=1e6):
    """2 K(k, 2 lam p) - K(k, lam p): removes the O(1/lam) term of the approach to the limit."""
    k, p = np.asarray(k, dtype=float), np.asarray(p, dtype=float)
    return 2 * K(k, 2 * lam * p) - K(k, lam * p)


# ---------------------------------------------------------------- norm lower bound

def van_der_corput(i):
    out, denom = 0.0, 1.0
    while i:
        denom *= 2
        i, bit = divmod(i, 2)
        out += bit / denom
    return out


def basis_widths(count, lo, hi):
    """Nested log-spaced widths: the first ``count`` terms of a van der Corput sequence on [lo, hi]."""
    return np.array([lo * (hi / lo) ** van_der_corput(i) for i in range(count)])


@dataclass(frozen=True)
class NormBound:
    bound: float
    error: float
    size: int
    kept: int

    def to_json(self):
        return {"bound": self.bound, "error": self.error, "basis_size": self.size, "kept": self.kept}


def _basis_matrices(K, R, lo, hi, budget, level):
    """Radial nodes, weights sigma^2 w, and the l = 0, 1 moment matrices shared by all basis sizes."""
    smax = ENVELOPE_CUT / lo
    q = int(round(budget.panel_nodes * level))
    sigma, w = _radial_nodes(smax, R, 2.0 / hi, q, budget.scale)
    return sigma, w * sigma * sigma, angular_moments(K, R, sigma, 1, q, budget.scale)


def _largest_generalized(A, G):
    lam, V = eigh(0.5 * (G + G.T))
    keep = lam > 1e-12 * lam.max()
    B = V[:, keep] / np.sqrt(lam[keep])
    return float(eigh(B.T @ (0.5 * (A + A.T)) @ B, eigvals_only=True)[-1]), int(keep.sum())


def _bound_from(mats, widths0, widths1):
    sigma, ws, M = mats
    best, kept = 0.0, 0
    for l, W in ((0, widths0), (1, widths1)):
        if not len(W):
            continue
        F = np.exp(-0.5 * np.outer(W, sigma) ** 2) * (W ** 1.5)[:, None]
        if l == 1:
            F = F * np.outer(W, sigma)
        A = (F * ws) @ M[l] @ (F * ws).T / (np.pi * (2 * l + 1))
        G = 4 * np.pi / (2 * l + 1) * (F * ws) @ F.T
        b, k = _largest_generalized(A, G)
        best, kept = max(best, b), kept + k
    return best, kept


def norm_lower_bounds(K, ball, sizes, budget=None, width_range=(0.2, 2.0)):
    """Largest generalized eigenvalue of (A, G) for nested Gaussian bases with angular factors {1, P_1}.

    A basis of size N holds the first ceil(N/2) widths with angular factor 1 and the first floor(N/2)
    with factor P_1; widths follow a van der Corput sequence in log scale, so the bases are nested.
    """
    sizes = [int(n) for n in sizes]
    if any(not 1 <= n <= 40 for n in sizes):
        raise ValueError("basis size must be in [1, 40]")
    budget = budget or Budget()
    R = ball.radius
    lo, hi = width_range[0] * R, width_range[1] * R
    coarse = _basis_matrices(K, R, lo, hi, budget, 1.0)
    fine = _basis_matrices(K, R, lo, hi, budget, budget.refine)
    out = []
    for n in sizes:
        w0, w1 = basis_widths((n + 1) // 2, lo, hi), basis_widths(n // 2, lo, hi)
        b1, _ = _bound_from(coarse, w0, w1)
        b2, kept = _bound_from(fine, w0, w1)
        out.append(NormBound(b2, abs(b2 - b1) + 1e-14, n, kept))
    return out


def norm_lower_bound(K, ball, size, budget=None, width_range=(0.2, 2.0)):
    return norm_lower_bounds(K, ball, [size], budget, width_range)[0]


# ---------------------------------------------------------------- mass scaling

def mass_scaling_check(make_kernel, m, ball, state, budget=None):
    """|P(K^m, phi, B) - P(K^1, D_m phi, m B)|; ``make_kernel(mass)`` builds the kernel family."""
    state_m = replace(state, mass=float(m))
    left = probability(make_kernel(m), state_m, ball, budget=budget)
    right = probability(make_kernel(1.0), dilate(state_m, m), ball.scaled(m), budget=budget)
    return {"m": float(m), "left": left.to_json(), "right": right.to_json(),
            "residual": abs(left.value - right.value), "error": left.error + right.error}


# ---------------------------------------------------------------- pinned regression values

def golden():
    with resources.files("causalpol").joinpath("golden.json").open() as fh:
        return json.load(fh)
