"""Named check suites run by the command line; each returns (results payload, assertions)."""
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import causality, expansion, inversion, localization, onedim, pd
from .kernels import (kernel_causal, kernel_lorentz, kernel_nwl, kernel_power, kernel_product, kernel_tct,
                      kernel_terno_moretti, profile_gaussian, profile_irreducible, profile_power)
from .specfun import gegenbauer_c

SUITES = ("pd", "nc", "invert", "maximality", "ct", "plss", "onedim")


def check(name, value, op, bound):
    """Assertion record; margin is positive when the assertion holds with room to spare."""
    value = float(value)
    ok = {">=": value >= bound, "<=": value <= bound, "<": value < bound, ">": value > bound}[op]
    margin = value - bound if op in (">=", ">") else bound - value
    return {"name": name, "value": value, "op": op, "bound": float(bound), "margin": float(margin),
            "pass": bool(ok)}


def _map(fn, items, parallel):
    if parallel and parallel > 1:
        with ThreadPoolExecutor(parallel) as pool:
            return list(pool.map(fn, items))
    return [fn(i) for i in items]


def builtin_kernels():
    """Kernels that are positive definite and normalized; used for the diagonal normalization check."""
    return [kernel_nwl(), kernel_terno_moretti(), kernel_tct(), kernel_power(1.5), kernel_power(2.0),
            kernel_power(3.0)]


def pd_expected():
    return [("K_1.5", kernel_power(1.5)), ("K_2", kernel_power(2.0)), ("K_3", kernel_power(3.0)),
            ("L_power0.5", kernel_lorentz(profile_power(0.5))), ("L_power1", kernel_lorentz(profile_power(1.0))),
            ("L_supplementary0.3", kernel_lorentz(profile_irreducible("supplementary", 0.3))),
            ("L_principal0", kernel_lorentz(profile_irreducible("principal", 0.0))),
            ("K_1.5*L_supplementary0", kernel_product(kernel_power(1.5),
                                                      kernel_lorentz(profile_irreducible("supplementary", 0.0))))]


def violation_expected():
    return [("K_0.5", kernel_power(0.5)), ("K_1", kernel_power(1.0)), ("K_1.25", kernel_power(1.25)),
            ("L_power0.3", kernel_lorentz(profile_power(0.3))),
            ("causal_principal1", kernel_causal(profile_irreducible("principal", 1.0)))]


# ------------------------------------------------------------------ pd (with expansion checks)

def suite_pd(seed=0, parallel=None):
    results, checks = {}, []
    grid = np.geomspace(0.2, 10.0, 5)
    co = expansion.extract_coefficients(kernel_lorentz(profile_power(0.5)), 8, grid, grid)
    ref = np.array([expansion.half_profile_coefficient(j, grid[:, None], grid[None, :]) for j in range(9)])
    err = float(np.max(np.abs(co.table - ref)))
    results["half_profile_coefficients_max_err"] = err
    checks.append(check("expansion: half-profile coefficients j<=8", err, "<=", 1e-8))
    for K in builtin_kernels():
        for rho in (0.5, 1.0, 2.0, 5.0):
            J, partial = expansion.adaptive_order(K, rho)
            s = float(partial[J])
            results[f"normalization[{K.name}, {rho:g}]"] = {"J": J, "partial_sum": s}
            checks.append(check(f"expansion: {K.name} rho={rho:g} partial sum >= 1-1e-6", s, ">=", 1 - 1e-6))
            checks.append(check(f"expansion: {K.name} rho={rho:g} partial sum <= 1", s, "<=", 1 + 1e-12))
    x = np.linspace(-1, 1, 41)
    worst = 0.0
    for r in (0.25, 0.5, 1.0, 1.5, 3.0):
        for h in (0.1, 0.3, 0.5):
            partial = sum(gegenbauer_c(n, r, x) * h ** n for n in range(61))
            worst = max(worst, float(np.max(np.abs((1 - 2 * h * x + h * h) ** (-r) - partial))))
    results["gegenbauer_generating_err"] = worst
    checks.append(check("expansion: Gegenbauer generating identity N=60", worst, "<=", 1e-10))

    seeds = range(seed, seed + 200)

    def run_pd(item):
        label, K = item
        return label, pd.violation_search(K, n=30, box=10.0, seeds=seeds)

    for label, rep in _map(run_pd, pd_expected(), parallel):
        results[f"pd[{label}]"] = rep.to_json()
        checks.append(check(f"pd: {label} min relative eigenvalue", rep.rel_min_eig, ">=", -1e-10))

    def run_violation(item):
        label, K = item
        rep = pd.violation_search(K, n=30, box=10.0, seeds=seeds)
        probe = pd.coefficient_probe(K, 0, (1.0, 2.0))
        return label, rep, probe

    for label, rep, probe in _map(run_violation, violation_expected(), parallel):
        cert = min(rep.quadratic_form, probe)
        results[f"violation[{label}]"] = {"search": rep.to_json(), "coefficient_probe_j0_1_2": probe,
                                          "certificate": cert}
        checks.append(check(f"pd: {label} violation certificate", cert, "<", -1e-6))
    return results, checks


# ------------------------------------------------------------------ nc

def suite_nc(seed=0, parallel=None):
    results, checks = {}, []
    for label, prof, mode in (("power0.5 profile_only", profile_power(0.5), "profile_only"),
                              ("power1.5 with_prefactor", profile_power(1.5), "with_prefactor")):
        rep = causality.nc_check(prof, mode)
        m = float(np.max(np.abs(rep.margin)))
        results[f"fingerprint[{label}]"] = rep.to_json()
        checks.append(check(f"nc: equality fingerprint {label}", m, "<=", 1e-10))
    for r, mode in ((0.25, "profile_only"), (0.4, "profile_only"), (0.75, "with_prefactor"),
                    (1.0, "with_prefactor"), (1.25, "with_prefactor")):
        rep = causality.nc_check(profile_power(r), mode)
        results[f"violation[power{r:g} {mode}]"] = rep.to_json()
        checks.append(check(f"nc: power{r:g} {mode} violated", rep.worst[1], "<", -1e-6))
    for kind, lam in (("principal", 0.0), ("principal", 0.5), ("principal", 1.0), ("supplementary", 0.3),
                      ("supplementary", 0.7)):
        out = causality.nc_irreducible_identity(kind, lam)
        results[f"irreducible[{kind}{lam:g}]"] = {"max_abs_diff": out["max_abs_diff"]}
        checks.append(check(f"nc: {kind}{lam:g} radial average closed form", out["max_abs_diff"], "<=", 1e-10))
    return results, checks


# ------------------------------------------------------------------ invert

INVERSION_CASES = (("power1", 1.0, lambda l: 4 * l / np.sinh(np.pi * l)),
                   ("power2", 2.0, lambda l: 8 * l ** 3 / np.sinh(np.pi * l)),
                   ("power1.5", 1.5, lambda l: 8 * l ** 2 / np.cosh(np.pi * l)))


def suite_invert(seed=0, parallel=None):
    results, checks = {}, []
    t = np.geomspace(1.0, 100.0, 200)
    for label, r, closed in INVERSION_CASES:
        prof = profile_power(r)
        w = inversion.invert(prof)
        sel = (w.lam >= 0.1) & (w.lam <= 5.0)
        rel = float(np.max(np.abs(w.values[sel] / closed(w.lam[sel]) - 1)))
        trip = float(np.max(np.abs(inversion.forward(w, t) - prof(t))))
        results[label] = {"rel_err": rel, "round_trip_err": trip, "normalization": w.normalization,
                          "cutoff": w.cutoff}
        checks.append(check(f"invert: {label} weight function rel err", rel, "<=", 1e-6))
        checks.append(check(f"invert: {label} round trip", trip, "<=", 1e-5))
    return results, checks


# ------------------------------------------------------------------ maximality

def suite_maximality(seed=0, parallel=None):
    results, checks = {}, []
    pairs = causality.sample_pairs(100_000, seed)
    cases = [("K_1.5", kernel_power(1.5), False), ("K_2", kernel_power(2.0), True), ("K_3", kernel_power(3.0), True)]
    for lam in (0.0, 0.5):
        G = kernel_lorentz(profile_irreducible("supplementary", lam))
        cases.append((f"K_1.5*L_supplementary{lam:g}", kernel_product(kernel_power(1.5), G), True))

    def run(case):
        label, K, strict = case
        return label, causality.maximality_check(K, pairs, strict), strict

    for label, out, strict in _map(run, cases, parallel):
        results[label] = out
        checks.append(check(f"maximality: {label} excess over K_1.5", out["max_excess"], "<=", 1e-12))
        if strict:
            checks.append(check(f"maximality: {label} strict margin", out["min_margin"], ">", 0.0))
    return results, checks


# ------------------------------------------------------------------ ct (currents, localization sanity, CT, mass)

def causal_family():
    profiles = [profile_power(r) for r in (0.5, 1.0, 1.5, 2.0, 3.0)]
    profiles += [profile_irreducible("principal", 1.0), profile_irreducible("supplementary", 0.5),
                 profile_gaussian(1.0)]
    return [kernel_causal(p) for p in profiles]


def suite_ct(seed=0, parallel=None):
    results, checks = {}, []
    for K in [kernel_terno_moretti()] + causal_family():
        res = causality.conserved_check(K, n=1000, seed=seed)
        results[f"conserved[{K.name}]"] = res
        checks.append(check(f"currents: {K.name} conserved residual", res, "<=", 1e-12))
    for K in (kernel_terno_moretti(), kernel_power(1.5)):
        worst = causality.timelike_definite_check(K, n=5, seeds=range(seed, seed + 200))
        results[f"timelike[{K.name}]"] = worst
        checks.append(check(f"currents: {K.name} timelike-definite margin", worst, ">=", -1e-10))

    L = localization
    budget = L.Budget(seed=seed)
    nwl = kernel_nwl()
    for s in (0.5, 1.0):
        for R in (0.5, 1.0, 2.0):
            p = L.probability(nwl, L.gaussian_state(s), L.BallRegion(radius=R), "tensor", budget)
            d = abs(p.value - L.nwl_gaussian_oracle(s, R))
            results[f"nwl_tensor[s={s:g}, R={R:g}]"] = p.to_json() | {"oracle_diff": d}
            checks.append(check(f"localization: NWL tensor s={s:g} R={R:g} vs oracle", d, "<=", 1e-6))
        p = L.probability(nwl, L.gaussian_state(s), L.BallRegion(radius=12 * s), "tensor", budget)
        results[f"nwl_limit[s={s:g}]"] = p.to_json()
        checks.append(check(f"localization: NWL s={s:g} R=12s", p.value, ">=", 1 - 1e-4))
    q = L.probability(nwl, L.gaussian_state(1.0), L.BallRegion(radius=1.0), "qmc", budget)
    d = abs(q.value - L.nwl_gaussian_oracle(1.0, 1.0))
    results["nwl_qmc[s=1, R=1]"] = q.to_json() | {"oracle_diff": d}
    checks.append(check("localization: NWL QMC s=1 R=1 within 3 SE", d, "<=", 3 * q.error))
    gold = L.golden()["tm_gaussian_s1_R1"]
    tm = L.probability(kernel_terno_moretti(), L.gaussian_state(1.0), L.BallRegion(radius=1.0), "tensor", budget)
    results["tm_regression"] = tm.to_json() | {"pinned": gold["qmc_value"], "pinned_se": gold["qmc_se"]}
    checks.append(check("localization: TM s=1 R=1 vs pinned QMC oracle", abs(tm.value - gold["qmc_value"]),
                        "<=", 3 * gold["qmc_se"] + tm.error))

    cases = [(K, s, t) for K in (kernel_terno_moretti(), kernel_tct(), kernel_power(1.5), kernel_power(2.0))
             for s in (0.5, 1.0) for t in (0.5, 1.0, 2.0)]

    def run(case):
        K, s, t = case
        return K, s, t, L.ct_inequality(K, L.gaussian_state(s), L.BallRegion(radius=1.0), t, "tensor", budget)

    for K, s, t, ct in _map(run, cases, parallel):
        tag = f"{K.name} s={s:g} t={t:g}"
        results[f"ct[{tag}]"] = ct.to_json()
        checks.append(check(f"ct: {tag} margin + 3 err", ct.margin + 3 * ct.error, ">=", 0.0))
        checks.append(check(f"ct: {tag} reported error", ct.error, "<=", 1e-3))

    for m in (0.5, 2.0):
        out = L.mass_scaling_check(lambda mm: kernel_power(1.5, mm), m, L.BallRegion(radius=1.0),
                                   L.gaussian_state(1.0), budget)
        results[f"mass_scaling[m={m:g}]"] = out
        checks.append(check(f"mass scaling: K_1.5 m={m:g} residual", out["residual"], "<=", 1e-4))
    return results, checks


# ------------------------------------------------------------------ plss

def suite_plss(seed=0, parallel=None):
    results, checks = {}, []
    L = localization
    budget = L.Budget(seed=seed)
    gold = L.golden()["plss_R2_k0z"]
    ball = L.BallRegion(radius=2.0)
    for K in (kernel_terno_moretti(), kernel_tct()):
        seq = L.plss_sequence(K, ball=ball, budget=budget)
        results[f"sequence[{K.name}]"] = [{"n": n, **p.to_json()} for n, p in seq]
        worst = min(b.value - a.value + a.error + b.error for (_, a), (_, b) in zip(seq, seq[1:]))
        checks.append(check(f"plss: {K.name} increasing within errors", worst, ">=", 0.0))
        checks.append(check(f"plss: {K.name} n=32 above pinned threshold", seq[-1][1].value, ">",
                            gold[K.name]["threshold"]))
        st = L.plss_state(K, 4)
        zb = L.probability(K, st, ball, "bessel", budget)
        zt = L.probability(K, st, ball, "tensor", budget)
        zq = L.probability(K, st, ball, "qmc", budget)
        results[f"cross_validation_n4[{K.name}]"] = {"bessel": zb.to_json(), "tensor": zt.to_json(),
                                                     "qmc": zq.to_json()}
        checks.append(check(f"plss: {K.name} n=4 bessel vs angular", abs(zb.value - zt.value), "<=",
                            zb.error + zt.error + 1e-12))
        checks.append(check(f"plss: {K.name} n=4 bessel vs QMC (3 SE)", abs(zb.value - zq.value), "<=",
                            3 * zq.error + zb.error))
    rng = np.random.default_rng(seed)
    k, p = rng.normal(size=(100, 3)), rng.normal(size=(100, 3))
    for K, limit in ((kernel_terno_moretti(), L.limit_tm), (kernel_tct(), L.limit_tct),
                     (kernel_power(0.5), L.limit_half)):
        err = float(np.max(np.abs(L.richardson_limit(K, k, p, 1e6) - limit(k, p))))
        results[f"limit[{K.name}]"] = err
        checks.append(check(f"plss: {K.name} limit kernel at lambda=1e6", err, "<=", 1e-8))
    K = kernel_power(1.5)
    seq = L.plss_sequence(K, ball=ball, ns=(2, 4, 8), method="tensor", budget=budget)
    results["exploratory[K_1.5]"] = [{"n": n, **p.to_json()} for n, p in seq]
    return results, checks


# ------------------------------------------------------------------ onedim

def suite_onedim(seed=0, parallel=None):
    results, checks = {}, []
    rng = np.random.default_rng(seed)
    x, y = rng.uniform(-5, 5, 100), rng.uniform(-5, 5, 100)
    r1 = float(np.max(np.abs(onedim.prefactor_identity_residual(np.sinh(x), np.sinh(y)))))
    r2 = float(np.max(np.abs(onedim.rapidity_identity_residual(profile_power(1.0), x, y))))
    r3 = float(np.max(np.abs(onedim.ray_restriction_residual(kernel_power(1.5), 3 * x, 3 * y))))
    results["identities"] = {"prefactor": r1, "rapidity": r2, "ray_restriction": r3}
    checks.append(check("onedim: prefactor identity", r1, "<=", 1e-12))
    checks.append(check("onedim: rapidity identity with h", r2, "<=", 1e-12))
    checks.append(check("onedim: 3-D ray restriction equals K1", r3, "<=", 1e-12))
    g = onedim.gaussian_counterexample(2.0)
    target = -2 * np.exp(0.5) * np.exp(-np.pi ** 2 / 2)
    i = int(np.argmin(np.abs(g["y"] - np.pi / 2)))
    results["gaussian2"] = {k: v for k, v in g.items() if not isinstance(v, np.ndarray)}
    checks.append(check("onedim: f_hat(pi/2) closed form", abs(g["f_hat_half_pi"] - target), "<=", 1e-8))
    checks.append(check("onedim: f_hat(pi/2) numeric transform", abs(g["f_hat_numeric"][i] - target), "<=", 1e-8))
    checks.append(check("onedim: f <= 1", g["f_max"], "<=", 1 + 1e-12))
    checks.append(check("onedim: argmax f at 0", abs(g["argmax"]), "<=", 0.0))
    checks.append(check("onedim: f_hat has a negative lobe", g["f_hat_min"], "<", 0.0))
    g1 = onedim.gaussian_counterexample(1.0)
    results["gaussian1_derivative_roots"] = g1["derivative_sign_changes"]
    checks.append(check("onedim: varsigma=1 derivative sign changes", g1["derivative_sign_changes"], "<=", 1))
    rep = onedim.gaussian_kernel_violation(2.0)
    results["gaussian2_kernel"] = rep.to_json()
    checks.append(check("onedim: K1 of Gaussian profile violation", rep.quadratic_form, "<", -1e-6))
    for r in (0.5, 1.0, 1.5):
        fac = onedim.factorization_check(profile_power(r))
        results[f"factorization[power{r:g}]"] = fac.to_json()
        checks.append(check(f"onedim: stationary power{r:g} min relative eigenvalue",
                            fac.stationary.rel_min_eig, ">=", -1e-10))
        checks.append(check(f"onedim: |K1(g g_1/2)| <= K1_1/2 for power{r:g}", fac.bound_excess, "<=", 1e-12))
    lk = onedim.infinite_divisibility_check()
    results["levy_khinchin"] = {"max_abs_diff": lk["max_abs_diff"], "measure_mass": lk["measure_mass"]}
    checks.append(check("onedim: Levy-Khinchin identity on [0, 10]", lk["max_abs_diff"], "<=", 1e-8))
    wrep, wdiff = onedim.werner_check()
    results["werner"] = wrep.to_json() | {"integral_diff": wdiff}
    checks.append(check("onedim: Werner kernel min relative eigenvalue", wrep.rel_min_eig, ">=", -1e-10))
    return results, checks


RUNNERS = {"pd": suite_pd, "nc": suite_nc, "invert": suite_invert, "maximality": suite_maximality,
           "ct": suite_ct, "plss": suite_plss, "onedim": suite_onedim}
