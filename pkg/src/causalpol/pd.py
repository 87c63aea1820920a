"""Empirical positive-definiteness tests: Gram spectra, coefficient probes, violation search."""
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .expansion import extract_coefficients

DEFAULT_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class GramReport:
    points: np.ndarray
    matrix: np.ndarray
    eigenvalues: np.ndarray
    worst_vector: np.ndarray
    tol: float
    label: str = ""

    @property
    def min_eig(self):
        return float(self.eigenvalues[0])

    @property
    def norm(self):
        return float(np.max(np.abs(self.eigenvalues)))

    @property
    def rel_min_eig(self):
        return self.min_eig / self.norm if self.norm > 0 else 0.0

    @property
    def verdict(self):
        return "pd_on_sample" if self.min_eig >= -self.tol * self.norm else "violated"

    @property
    def quadratic_form(self):
        c = self.worst_vector
        return float(np.real(np.conj(c) @ self.matrix @ c))

    def to_json(self, full=False):
        out = {"label": self.label, "n": int(len(self.points)), "min_eig": self.min_eig,
               "rel_min_eig": self.rel_min_eig, "norm": self.norm, "tol": self.tol,
               "quadratic_form": self.quadratic_form, "verdict": self.verdict}
        if full:
            out["points"] = np.asarray(self.points).tolist()
            out["spectrum"] = self.eigenvalues.tolist()
            out["worst_vector"] = np.real_if_close(self.worst_vector).tolist()
        return out


def _gram_matrix(K, pts):
    if pts.ndim == 1:
        return np.asarray(K(pts[:, None], pts[None, :]))
    return np.asarray(K(pts[:, None, :], pts[None, :, :]))


def gram_test(K, points, tol=DEFAULT_TOL, label=""):
    """Spectrum of M_ab = K(p_a, p_b); verdict pd_on_sample iff min eig >= -tol ||M||."""
    pts = np.asarray(points, dtype=float)
    n = len(pts)
    if n > 500:
        raise ValueError("at most 500 points")
    flat = pts.reshape(n, -1)
    if len(np.unique(flat, axis=0)) < n:
        raise ValueError("duplicate sample points")
    if not getattr(K, "allow_origin", True) and np.any(np.all(flat == 0, axis=1)):
        raise ValueError("kernel undefined at the origin")
    M = _gram_matrix(K, pts)
    if not np.all(np.isfinite(M)):
        raise ValueError("kernel evaluation failed (non-finite values)")
    asym = np.max(np.abs(M - np.conj(M.T)))
    if asym > 1e-13 * max(1.0, np.max(np.abs(M))):
        raise ValueError(f"Gram matrix not Hermitian (defect {asym:.2e})")
    H = 0.5 * (M + np.conj(M.T))
    vals, vecs = np.linalg.eigh(H)
    return GramReport(pts, H, vals, vecs[:, 0], tol, label or getattr(K, "name", ""))


def quadratic_form(K, points, c):
    """sum_ab conj(c_a) c_b K(p_a, p_b)."""
    M = _gram_matrix(K, np.asarray(points, dtype=float))
    c = np.asarray(c)
    return float(np.real(np.conj(c) @ M @ c))


def ray_probe(K, direction, radii, coefficients):
    """Quadratic form of K restricted to the ray through ``direction``."""
    d = np.asarray(direction, dtype=float)
    if abs(np.linalg.norm(d) - 1) > 1e-12:
        raise ValueError("direction must be a unit vector")
    pts = np.asarray(radii, dtype=float)[:, None] * d[None, :]
    return quadratic_form(K, pts, coefficients)


def coefficient_probe(K, j, radii, weights=None):
    """Two-point quadratic form of the Legendre coefficient k_j at radii (sigma, rho).

    Default weights (1/sqrt(k_j(s,s)), -1/sqrt(k_j(r,r))) compare k_j(s,r) with the geometric
    mean of the diagonal; a negative value certifies that k_j, hence K, is not PD.
    Explicit weights (1, -1) give k_j(s,s) + k_j(r,r) - 2 k_j(s,r).
    """
    s, r = map(float, radii)
    if s == r or s <= 0 or r <= 0:
        raise ValueError("need distinct positive radii")
    coeffs = extract_coefficients(K, j, check=False)
    kss, krr, ksr = (float(np.real(coeffs(a, b)[j])) for a, b in ((s, s), (r, r), (s, r)))
    if weights is None:
        if kss <= 0 or krr <= 0:
            return min(kss, krr)
        weights = (1 / np.sqrt(kss), -1 / np.sqrt(krr))
    c1, c2 = weights
    return float(c1 * c1 * kss + c2 * c2 * krr + 2 * c1 * c2 * ksr)


def fibonacci_sphere(n, radius=1.0):
    """n nearly uniform points on the sphere of the given radius."""
    i = np.arange(n) + 0.5
    z = 1 - 2 * i / n
    phi = np.pi * (1 + np.sqrt(5)) * i
    rxy = np.sqrt(1 - z * z)
    return radius * np.column_stack([rxy * np.cos(phi), rxy * np.sin(phi), z])


def structured_configurations(n, box):
    """Point sets aimed at the radial (j = 0) counterexamples: rays, ladders, shells."""
    axis = np.array([0.0, 0.0, 1.0])
    configs = [("ray_geometric", np.geomspace(box * 1e-3, box, n)[:, None] * axis)]
    h_max = box / (1 + np.sqrt(1 + box * box))
    h = np.linspace(h_max / n, h_max, n)
    configs.append(("ray_h1_equispaced", (2 * h / (1 - h * h))[:, None] * axis))
    ladder = np.geomspace(0.25, box, 12)
    tiny = 1e-3 * np.array([0.6, 0.0, 0.8])
    for rho in ladder:
        configs.append((f"center_shell_{rho:.3g}", np.vstack([tiny, fibonacci_sphere(n - 1, rho)])))
    half = n // 2
    for a, s in enumerate(ladder[:-1]):
        r = ladder[min(a + 3, len(ladder) - 1)]
        pts = np.vstack([fibonacci_sphere(half, s), fibonacci_sphere(n - half, r) @ _tilt()])
        configs.append((f"two_shells_{s:.3g}_{r:.3g}", pts))
    return configs


def _tilt():
    c, s = np.cos(0.37), np.sin(0.37)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def random_configuration(seed, n, box):
    """n points uniform in the ball of radius ``box``; deterministic in the seed."""
    rng = np.random.default_rng(seed)
    v = rng.standard_normal((n, 3))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    return v * (box * rng.random(n) ** (1 / 3))[:, None]


def violation_search(K, n=30, box=10.0, seeds=range(100), tol=DEFAULT_TOL, structured=True, workers=None):
    """Most negative relative Gram eigenvalue over seeded random sets (plus structured sets)."""
    seeds = list(seeds)
    if not seeds:
        raise ValueError("need at least one seed")
    jobs = [(f"seed{s}", random_configuration(s, n, box)) for s in seeds]
    if structured:
        jobs += structured_configurations(n, box)

    def run(job):
        label, pts = job
        return gram_test(K, pts, tol, label)

    if workers and workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            reports = list(pool.map(run, jobs))
    else:
        reports = [run(j) for j in jobs]
    return min(reports, key=lambda r: r.rel_min_eig)
