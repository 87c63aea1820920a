"""Special functions and kinematic helpers shared by the other modules."""
import numpy as np

_CLAMP = 1e-12


def _check_unit_interval(x):
    x = np.asarray(x, dtype=float)
    if np.any(np.abs(x) > 1 + _CLAMP):
        raise ValueError("argument outside [-1, 1]")
    return np.clip(x, -1.0, 1.0)


def legendre_p(j, x):
    """Legendre polynomial P_j(x) by the three-term recurrence."""
    if j < 0:
        raise ValueError("degree must be nonnegative")
    x = _check_unit_interval(x)
    p_prev, p = np.ones_like(x), x.copy()
    if j == 0:
        return p_prev
    for n in range(2, j + 1):
        p_prev, p = p, ((2 * n - 1) * x * p - (n - 1) * p_prev) / n
    return p


def legendre_all(jmax, x):
    """Array of P_0..P_jmax at x, shape (jmax + 1,) + x.shape."""
    x = _check_unit_interval(x)
    out = np.empty((jmax + 1,) + x.shape)
    out[0] = 1.0
    if jmax >= 1:
        out[1] = x
    for n in range(2, jmax + 1):
        out[n] = ((2 * n - 1) * x * out[n - 1] - (n - 1) * out[n - 2]) / n
    return out


def gegenbauer_c(n, r, x):
    """Gegenbauer polynomial C_n^r(x) by recurrence."""
    if r <= 0:
        raise ValueError("Gegenbauer index r must be positive")
    if n < 0:
        raise ValueError("degree must be nonnegative")
    x = _check_unit_interval(x)
    c_prev, c = np.ones_like(x), 2 * r * x
    if n == 0:
        return c_prev
    for k in range(2, n + 1):
        c_prev, c = c, (2 * x * (k + r - 1) * c - (k + 2 * r - 2) * c_prev) / k
    return c


def gauss_legendre_nodes(order):
    """Gauss-Legendre nodes and weights on [-1, 1]."""
    if order < 1:
        raise ValueError("order must be positive")
    return np.polynomial.legendre.leggauss(int(order))


def gauss_legendre_interval(a, b, order, panels=1):
    """Composite Gauss-Legendre rule on [a, b] with equal panels."""
    x, w = gauss_legendre_nodes(order)
    edges = np.linspace(a, b, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


def energy(p, m=1.0):
    """Relativistic energy sqrt(m^2 + |p|^2); p has shape (..., 3) or is a scalar momentum."""
    p = np.asarray(p, dtype=float)
    sq = p * p if p.ndim == 0 else np.sum(p * p, axis=-1)
    return np.sqrt(m * m + sq)


def energy_1d(p, m=1.0):
    p = np.asarray(p, dtype=float)
    return np.sqrt(m * m + p * p)


def arccosh(t):
    """Rapidity kappa = ln(t + sqrt(t^2 - 1)) for t >= 1."""
    t = np.asarray(t, dtype=float)
    if np.any(t < 1 - 1e-12):
        raise ValueError("rapidity needs t >= 1")
    return np.arccosh(np.maximum(t, 1.0))


def arccosh1p(u):
    """arccosh(1 + u) accurate for small u >= 0."""
    u = np.maximum(np.asarray(u, dtype=float), 0.0)
    return np.log1p(u + np.sqrt(u * (2.0 + u)))


def rapidity_of_momentum(rho, m=1.0):
    """l(rho) = ln(eps(rho) + rho) for mass m, i.e. arcsinh(rho / m)."""
    return np.arcsinh(np.asarray(rho, dtype=float) / m)


def minkowski_excess(k, p, m=1.0):
    """eps(k) eps(p) - k.p - m^2 >= 0, computed without cancellation.

    k and p have shape (..., 3) and broadcast against each other.
    """
    k = np.asarray(k, dtype=float)
    p = np.asarray(p, dtype=float)
    a = np.sqrt(np.sum(k * k, axis=-1))
    b = np.sqrt(np.sum(p * p, axis=-1))
    ea = np.sqrt(m * m + a * a)
    eb = np.sqrt(m * m + b * b)
    with np.errstate(invalid="ignore", divide="ignore"):
        ka = np.where(a[..., None] > 0, k / np.where(a > 0, a, 1.0)[..., None], 0.0)
        pb = np.where(b[..., None] > 0, p / np.where(b > 0, b, 1.0)[..., None], 0.0)
    diff = ka - pb
    one_minus_cos = 0.5 * np.sum(diff * diff, axis=-1)
    return _excess(a, b, ea, eb, one_minus_cos, m)


def minkowski_excess_radial(sigma, rho, x, m=1.0):
    """Same as minkowski_excess for |k| = sigma, |p| = rho and cosine x."""
    sigma = np.asarray(sigma, dtype=float)
    rho = np.asarray(rho, dtype=float)
    es = np.sqrt(m * m + sigma * sigma)
    er = np.sqrt(m * m + rho * rho)
    return _excess(sigma, rho, es, er, 1.0 - np.asarray(x, dtype=float), m)


def minkowski_excess_1d(k, p, m=1.0):
    """eps(k) eps(p) - k p - m^2 in one dimension."""
    k = np.asarray(k, dtype=float)
    p = np.asarray(p, dtype=float)
    same = np.sign(k) * np.sign(p) >= 0
    return _excess(np.abs(k), np.abs(p), np.sqrt(m * m + k * k), np.sqrt(m * m + p * p),
                   np.where(same, 0.0, 2.0), m)


def _excess(a, b, ea, eb, one_minus_cos, m):
    # 2 (t - m^2) = (a - b)^2 [(ea + eb)^2 - (a + b)^2] / (ea + eb)^2 + 4 a b (1 - cos)
    s = ea + eb
    gap = m * m / (ea + a) + m * m / (eb + b)
    radial = (a - b) ** 2 * gap * (ea + a + eb + b) / (s * s)
    return 0.5 * radial + a * b * one_minus_cos


def sinhc_ratio(lam, kappa, kind):
    """sin(lam kappa)/(lam sinh kappa) or sinh(...)/(...), with the lam -> 0 and kappa -> 0 limits."""
    lam = np.asarray(lam, dtype=float)
    kappa = np.asarray(kappa, dtype=float)
    lk = lam * kappa
    small = np.abs(lk) < 1e-4
    safe = np.where(small, 1.0, lk)
    if kind == "principal":
        num = np.where(small, 1.0 - lk * lk / 6.0 + lk ** 4 / 120.0, np.sin(safe) / safe)
    else:
        num = np.where(small, 1.0 + lk * lk / 6.0 + lk ** 4 / 120.0, np.sinh(safe) / safe)
    ks = np.abs(kappa) < 1e-4
    kappa_safe = np.where(ks, 1.0, kappa)
    den = np.where(ks, 1.0 + kappa * kappa / 6.0 + kappa ** 4 / 120.0, np.sinh(kappa_safe) / kappa_safe)
    return num / den


def random_rotation(rng):
    """Uniformly random 3x3 rotation matrix."""
    q, r = np.linalg.qr(rng.standard_normal((3, 3)))
    q = q * np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q


def boost(p, axis, eta, m=1.0):
    """Spatial part of the Lorentz boost of the on-shell four-momentum (eps(p), p)."""
    p = np.asarray(p, dtype=float)
    e = energy(p, m)
    out = p.copy()
    pa = p[..., axis]
    out[..., axis] = np.cosh(eta) * pa + np.sinh(eta) * e
    return out
