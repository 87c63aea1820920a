"""Command-line front end: data commands, check suites, JSON-lines run log, and summary reports."""
import argparse
import csv
import hashlib
import io
import json
import os
import sys
import time
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from . import causality, expansion, inversion, localization, onedim, pd, suites
from .kernels import kernel_from_spec, profile_from_spec

OUTPUT_ENV = "CAUSALPOL_OUTPUT_DIR"
EVAL_TOL = 1e-12


class UsageError(Exception):
    """Bad configuration, spec or input file (exit code 2)."""


# ------------------------------------------------------------------ serialization

def clean(obj):
    """JSON-safe copy with numpy scalars/arrays converted and non-finite floats spelled out."""
    if isinstance(obj, dict):
        return {str(k): clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return clean(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if np.isfinite(v) else repr(v)
    if isinstance(obj, complex):
        return {"re": clean(obj.real), "im": clean(obj.imag)}
    return obj


def canonical(obj):
    return json.dumps(clean(obj), sort_keys=True, separators=(",", ":"))


def config_hash(config):
    return hashlib.sha256(canonical(config).encode()).hexdigest()[:16]


def output_dir(args):
    d = Path(args.out_dir or os.environ.get(OUTPUT_ENV) or "causalpol_runs")
    d.mkdir(parents=True, exist_ok=True)
    return d


def make_record(command, config, payload, assertions, elapsed):
    return {"config_hash": config_hash(config), "timestamp": datetime.now(timezone.utc).isoformat(),
            "version": __version__, "command": command, "seed": config.get("seed"),
            "elapsed_s": round(elapsed, 3), "pass": all(a["pass"] for a in assertions),
            "payload": clean(payload), "assertions": clean(assertions)}


def append_record(path, record):
    with open(path, "a") as fh:
        fh.write(json.dumps(record, sort_keys=True) + "\n")


def write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)


# ------------------------------------------------------------------ configuration

def load_config(args):
    """JSON config file (optional) overlaid with explicitly given flags."""
    config = {}
    if args.config:
        try:
            config = json.loads(Path(args.config).read_text())
        except FileNotFoundError:
            raise UsageError(f"config file not found: {args.config}")
        except json.JSONDecodeError as e:
            raise UsageError(f"config file is not valid JSON: {e}")
        if not isinstance(config, dict):
            raise UsageError("config must be a JSON object")
    for key, value in vars(args).items():
        if key in ("config", "out_dir", "log", "func") or value is None:
            continue
        config[key] = value
    config.setdefault("seed", 0)
    for key in ("n", "points", "order", "J", "qmc_log2", "randomizations", "size"):
        if key in config and isinstance(config[key], (int, float)) and config[key] <= 0:
            raise UsageError(f"budget {key} must be positive")
    return config


def parse_json_arg(value, what):
    if isinstance(value, dict):
        return value
    if value is None:
        raise UsageError(f"missing {what}")
    text = value
    if not value.lstrip().startswith("{"):
        try:
            text = Path(value).read_text()
        except FileNotFoundError:
            raise UsageError(f"{what} file not found: {value}")
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise UsageError(f"{what} is not valid JSON: {e}")


def get_kernel(config):
    spec = parse_json_arg(config.get("kernel"), "kernel spec")
    try:
        return kernel_from_spec(spec), spec
    except (KeyError, TypeError, ValueError) as e:
        raise UsageError(f"malformed kernel spec: {e}")


def get_profile(config):
    spec = parse_json_arg(config.get("profile"), "profile spec")
    try:
        return profile_from_spec(spec, float(spec.get("m", 1.0))), spec
    except (KeyError, TypeError, ValueError) as e:
        raise UsageError(f"malformed profile spec: {e}")


def get_state(config, K=None):
    spec = config.get("state") or {"family": "gaussian", "s": 1.0}
    spec = parse_json_arg(spec, "state spec")
    family = spec.get("family", "gaussian")
    try:
        if family == "gaussian":
            st = localization.gaussian_state(float(spec.get("s", 1.0)), tuple(spec.get("center", (0, 0, 0))),
                                             float(spec.get("m", 1.0)))
        elif family == "plss":
            if K is None:
                raise UsageError("plss state needs a kernel")
            st = localization.plss_state(K, float(spec["n"]), tuple(spec.get("k0", (0, 0, 1))),
                                         tuple(spec.get("b", (0, 0, 0))))
        else:
            raise UsageError(f"unknown state family {family!r}")
    except (KeyError, TypeError, ValueError) as e:
        raise UsageError(f"malformed state spec: {e}")
    return st, spec


def get_budget(config):
    return localization.Budget(scale=float(config.get("budget_scale", 1.0)),
                               qmc_log2=int(config.get("qmc_log2", 16)),
                               qmc_randomizations=int(config.get("randomizations", 16)),
                               seed=int(config.get("seed", 0)))


def read_points(path):
    """Rows of six numbers (k1 k2 k3 p1 p2 p3), comma or whitespace separated; '#' starts a comment."""
    try:
        text = Path(path).read_text()
    except FileNotFoundError:
        raise UsageError(f"points file not found: {path}")
    rows = []
    for i, line in enumerate(text.splitlines(), 1):
        line = line.split("#")[0].strip()
        if not line:
            continue
        try:
            vals = [float(v) for v in line.replace(",", " ").split()]
        except ValueError:
            raise UsageError(f"{path}:{i}: not numeric")
        if len(vals) != 6:
            raise UsageError(f"{path}:{i}: expected 6 numbers, got {len(vals)}")
        rows.append(vals)
    if not rows:
        raise UsageError(f"no points in {path}")
    return np.array(rows)


# ------------------------------------------------------------------ commands

def cmd_eval(config, out):
    K, spec = get_kernel(config)
    pts = read_points(config.get("points"))
    vals = K(pts[:, :3], pts[:, 3:])
    rows = [list(r) + [float(v), EVAL_TOL] for r, v in zip(pts.tolist(), np.atleast_1d(vals))]
    header = ["k1", "k2", "k3", "p1", "p2", "p3", "K", "tolerance"]
    return {"kernel": spec, "count": len(rows)}, [], ("eval.csv", header, rows)


def cmd_expand(config, out):
    K, spec = get_kernel(config)
    J = int(config.get("J", 8))
    grid = np.asarray(config.get("grid", [0.5, 1.0, 2.0, 5.0]), dtype=float)
    co = expansion.extract_coefficients(K, J, grid, grid, check=True)
    rows = [list(r) + [1e-13] for r in co.rows()]
    tails = {f"{r:g}": float(expansion.tail_bound(co, r)) for r in grid}
    return {"kernel": spec, "J": J, "tail_bound": tails}, [], ("expand.csv", ["j", "sigma", "rho", "k_j",
                                                                                 "tolerance"], rows)


def _expect(assertions, config, verdict_ok, name):
    exp = config.get("expect")
    if exp is not None:
        assertions.append({"name": name, "value": None, "op": "==", "bound": None, "margin": None,
                           "pass": bool(verdict_ok(exp))})


def cmd_pd_test(config, out):
    K, spec = get_kernel(config)
    seed = int(config.get("seed", 0))
    n_sets = int(config.get("sets", 100))
    rep = pd.violation_search(K, int(config.get("n", 30)), float(config.get("box", 10.0)),
                              range(seed, seed + n_sets), workers=config.get("parallel"))
    payload = {"kernel": spec, "search": rep.to_json(full=True)}
    if config.get("probe", True):
        payload["coefficient_probe_j0_1_2"] = pd.coefficient_probe(K, 0, (1.0, 2.0))
    assertions = []
    _expect(assertions, config, lambda e: (e == "pd") == (rep.verdict == "pd_on_sample"), "pd-test verdict")
    rows = [[i, float(v), rep.tol] for i, v in enumerate(rep.eigenvalues)]
    return payload, assertions, ("pd_spectrum.csv", ["index", "eigenvalue", "relative_tolerance"], rows)


def cmd_nc_check(config, out):
    prof, spec = get_profile(config)
    mode = config.get("mode", "with_prefactor")
    try:
        rep = causality.nc_check(prof, mode)
    except ValueError as e:
        raise UsageError(str(e))
    rows = [list(r) + [1e-12] for r in rep.rows()]
    assertions = []
    _expect(assertions, config, lambda e: (e == "holds") == (rep.worst[1] >= -1e-10), "nc verdict")
    return {"profile": spec, "report": rep.to_json()}, assertions, (
        "nc.csv", ["rho", "lhs", "rhs", "margin", "quad_tolerance"], rows)


def cmd_invert(config, out):
    prof, spec = get_profile(config)
    try:
        w = inversion.invert(prof)
    except inversion.InversionError as e:
        raise UsageError(f"inversion failed: {e}")
    rows = [[l, v, w.imag_max] for l, v in w.rows()]
    return {"profile": spec, "weight": w.to_json()}, [], ("weight.csv", ["lambda", "w", "imag_part_bound"], rows)


def cmd_maximality(config, out):
    K, spec = get_kernel(config)
    pairs = causality.sample_pairs(int(config.get("n", 100_000)), int(config.get("seed", 0)))
    res = causality.maximality_check(K, pairs, strict=bool(config.get("strict", True)))
    assertions = [suites.check("maximality excess over K_1.5", res["max_excess"], "<=", 1e-12)]
    return {"kernel": spec, "result": res}, assertions, None


def cmd_ct_check(config, out):
    K, kspec = get_kernel(config)
    st, sspec = get_state(config, K)
    ball = localization.BallRegion(tuple(config.get("center", (0, 0, 0))), float(config.get("radius", 1.0)))
    times = [float(t) for t in config.get("times", [0.5, 1.0, 2.0])]
    budget = get_budget(config)
    margins = [localization.ct_inequality(K, st, ball, t, config.get("method", "auto"), budget) for t in times]
    assertions = [suites.check(f"ct margin + 3 err t={m.t:g}", m.margin + 3 * m.error, ">=", 0.0) for m in margins]
    rows = [[m.t, m.margin, m.error, m.grown.value, m.evolved.value] for m in margins]
    return ({"kernel": kspec, "state": sspec, "radius": ball.radius, "margins": [m.to_json() for m in margins]},
            assertions, ("ct.csv", ["t", "margin", "error", "grown", "evolved"], rows))


def cmd_localize(config, out):
    K, kspec = get_kernel(config)
    st, sspec = get_state(config, K)
    radii = config.get("radii") or [float(config.get("radius", 1.0))]
    center = tuple(config.get("center", st.center))
    budget = get_budget(config)
    res = [(float(R), localization.probability(K, st, localization.BallRegion(center, float(R)),
                                               config.get("method", "auto"), budget)) for R in radii]
    rows = [[R, p.value, p.error, p.method] for R, p in res]
    return ({"kernel": kspec, "state": sspec, "results": [{"radius": R, **p.to_json()} for R, p in res]}, [],
            ("localize.csv", ["radius", "probability", "error", "method"], rows))


def cmd_plss(config, out):
    K, kspec = get_kernel(config)
    ns = [float(n) for n in config.get("ns", [2, 4, 8, 16, 32])]
    ball = localization.BallRegion(tuple(config.get("b", (0, 0, 0))), float(config.get("radius", 2.0)))
    seq = localization.plss_sequence(K, tuple(config.get("k0", (0, 0, 1))), ball.center, ball, ns,
                                     config.get("method", "auto"), get_budget(config))
    rows = [[n, p.value, p.error, p.method] for n, p in seq]
    return ({"kernel": kspec, "sequence": [{"n": n, **p.to_json()} for n, p in seq]}, [],
            ("plss.csv", ["n", "probability", "error", "method"], rows))


def cmd_norm_bound(config, out):
    K, kspec = get_kernel(config)
    sizes = [int(s) for s in config.get("sizes", [4, 8, 12])]
    ball = localization.BallRegion(radius=float(config.get("radius", 1.0)))
    try:
        bounds = localization.norm_lower_bounds(K, ball, sizes, get_budget(config))
    except ValueError as e:
        raise UsageError(str(e))
    rows = [[b.size, b.bound, b.error, b.kept] for b in bounds]
    return ({"kernel": kspec, "radius": ball.radius, "bounds": [b.to_json() for b in bounds]}, [],
            ("norm_bound.csv", ["basis_size", "bound", "error", "kept"], rows))


def cmd_onedim(config, out):
    s = float(config.get("varsigma", 2.0))
    try:
        g = onedim.gaussian_counterexample(s)
    except ValueError as e:
        raise UsageError(str(e))
    x = np.linspace(-10, 10, 401)
    write_csv(out / "onedim_f.csv", ["x", "f", "tolerance"], [[a, b, 1e-15] for a, b in zip(x, onedim.gaussian_f(x, s))])
    rows = [[a, b, c, abs(b - c)] for a, b, c in zip(g["y"], g["f_hat_closed"], g["f_hat_numeric"])]
    payload = {k: v for k, v in g.items() if not isinstance(v, np.ndarray)}
    assertions = [suites.check("f <= 1", g["f_max"], "<=", 1 + 1e-12),
                  suites.check("transform closed form vs quadrature", g["transform_max_abs_diff"], "<=", 1e-8)]
    return payload, assertions, ("onedim_fhat.csv", ["y", "f_hat_closed", "f_hat_numeric", "abs_diff"], rows)


COMMANDS = {"eval": cmd_eval, "expand": cmd_expand, "pd-test": cmd_pd_test, "nc-check": cmd_nc_check,
            "invert": cmd_invert, "maximality": cmd_maximality, "ct-check": cmd_ct_check,
            "localize": cmd_localize, "plss": cmd_plss, "norm-bound": cmd_norm_bound, "onedim": cmd_onedim}


def run_command(args):
    config = load_config(args)
    command = args.command
    out = output_dir(args)
    t0 = time.perf_counter()
    payload, assertions, table = COMMANDS[command](config, out)
    record = make_record(command, config, payload, assertions, time.perf_counter() - t0)
    if table is not None:
        name, header, rows = table
        target = Path(config["output"]) if config.get("output") else out / name
        write_csv(target, header, rows)
        record["csv"] = str(target)
    append_record(args.log or out / "runs.jsonl", record)
    print(json.dumps(clean({"command": command, "pass": record["pass"], "payload": payload}), indent=1,
                     sort_keys=True))
    return 0 if record["pass"] else 1


def run_suite(args):
    config = load_config(args)
    name = config.get("name")
    if name not in suites.SUITES + ("all",):
        raise UsageError(f"unknown suite {name!r}")
    names = suites.SUITES if name == "all" else (name,)
    out = output_dir(args)
    log = args.log or out / "runs.jsonl"
    ok = True
    for sub in names:
        t0 = time.perf_counter()
        payload, assertions = suites.RUNNERS[sub](int(config["seed"]), config.get("parallel"))
        cfg = dict(config, name=sub)
        record = make_record(f"suite:{sub}", cfg, {"suite": sub, "results": payload}, assertions,
                             time.perf_counter() - t0)
        append_record(log, record)
        failed = [a for a in assertions if not a["pass"]]
        ok &= not failed
        print(f"suite {sub}: {len(assertions) - len(failed)}/{len(assertions)} passed "
              f"({record['elapsed_s']:.1f} s)")
        for a in failed:
            print(f"  FAIL {a['name']}: {a['value']} {a['op']} {a['bound']}")
    return 0 if ok else 1


# ------------------------------------------------------------------ report

def read_log(path):
    records, bad = [], 0
    for line in Path(path).read_text().splitlines():
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
            if not isinstance(rec, dict) or "command" not in rec:
                raise ValueError
            records.append(rec)
        except ValueError:
            bad += 1
    return records, bad


def report_rows(records):
    rows = []
    for rec in records:
        asserts = rec.get("assertions") or []
        if not asserts:
            rows.append({"command": rec["command"], "assertion": "(no assertions)", "status": "PASS",
                         "value": "", "bound": "", "margin": "", "elapsed_s": rec.get("elapsed_s", ""),
                         "timestamp": rec.get("timestamp", "")})
        for a in asserts:
            rows.append({"command": rec["command"], "assertion": a["name"],
                         "status": "PASS" if a["pass"] else "FAIL", "value": a.get("value"),
                         "bound": a.get("bound"), "margin": a.get("margin"),
                         "elapsed_s": rec.get("elapsed_s", ""), "timestamp": rec.get("timestamp", "")})
    rows.sort(key=lambda r: r["status"] != "FAIL")
    return rows


def run_report(args):
    path = Path(args.logfile)
    if not path.exists():
        raise UsageError(f"log not found: {path}")
    records, bad = read_log(path)
    if not records:
        raise UsageError(f"no valid records in {path}" + (f" ({bad} corrupted lines)" if bad else ""))
    rows = report_rows(records)
    out = output_dir(args)
    header = ["command", "assertion", "status", "value", "bound", "margin", "elapsed_s", "timestamp"]
    write_csv(out / "report.csv", header, [[r[h] for h in header] for r in rows])
    text = io.StringIO()
    matrix = {}
    for rec in records:
        p, f = matrix.get(rec["command"], (0, 0))
        matrix[rec["command"]] = (p + bool(rec.get("pass")), f + (not rec.get("pass")))
    text.write(f"{len(records)} runs, {bad} corrupted lines skipped\n\n")
    text.write(f"{'command':<24}{'runs passed':>12}{'runs failed':>12}{'worst margin':>16}\n")
    for cmd, (p, f) in matrix.items():
        margins = [r["margin"] for r in rows if r["command"] == cmd and isinstance(r["margin"], (int, float))]
        worst = f"{min(margins):.3e}" if margins else "-"
        text.write(f"{cmd:<24}{p:>12}{f:>12}{worst:>16}\n")
    fails = [r for r in rows if r["status"] == "FAIL"]
    text.write(f"\n{len(fails)} failing assertions\n")
    for r in fails:
        text.write(f"FAIL {r['command']}: {r['assertion']} (value {r['value']}, bound {r['bound']})\n")
    (out / "report.txt").write_text(text.getvalue())
    sys.stdout.write(text.getvalue())
    if bad:
        print(f"warning: {bad} corrupted lines skipped", file=sys.stderr)
    return 0 if not fails else 1


# ------------------------------------------------------------------ parser

def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON configuration file; flags override its entries")
    common.add_argument("--out-dir", help=f"output directory (default ${OUTPUT_ENV} or ./causalpol_runs)")
    common.add_argument("--log", help="JSON-lines run log (default <out-dir>/runs.jsonl)")
    common.add_argument("--seed", type=int)
    common.add_argument("--parallel", type=int, help="worker threads for intra-suite parallelism")

    parser = argparse.ArgumentParser(prog="causalpol", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, help_):
        p = sub.add_parser(name, parents=[common], help=help_)
        p.set_defaults(func=run_command)
        return p

    p = add("eval", "evaluate a kernel on point pairs")
    p.add_argument("--kernel")
    p.add_argument("--points", help="file with rows k1 k2 k3 p1 p2 p3")
    p.add_argument("--output")
    p = add("expand", "Legendre coefficients k_j on a radial grid")
    p.add_argument("--kernel")
    p.add_argument("--J", type=int)
    p.add_argument("--grid", type=float, nargs="+")
    p.add_argument("--output")
    p = add("pd-test", "randomized Gram-matrix positive-definiteness search")
    p.add_argument("--kernel")
    p.add_argument("--n", type=int)
    p.add_argument("--box", type=float)
    p.add_argument("--sets", type=int)
    p.add_argument("--expect", choices=["pd", "violated"])
    p.add_argument("--output")
    p = add("nc-check", "necessary condition on a radial grid")
    p.add_argument("--profile")
    p.add_argument("--mode", choices=causality.MODES)
    p.add_argument("--expect", choices=["holds", "violated"])
    p.add_argument("--output")
    p = add("invert", "weight function of a profile")
    p.add_argument("--profile")
    p.add_argument("--output")
    p = add("maximality", "compare |K| with K_3/2 on sampled pairs")
    p.add_argument("--kernel")
    p.add_argument("--n", type=int)
    p.add_argument("--strict", action=argparse.BooleanOptionalAction, default=None)
    p = add("ct-check", "causal time evolution margins")
    p.add_argument("--kernel")
    p.add_argument("--state")
    p.add_argument("--radius", type=float)
    p.add_argument("--times", type=float, nargs="+")
    p.add_argument("--method", choices=["auto", "tensor", "bessel", "qmc"])
    p.add_argument("--output")
    p = add("localize", "localization probability of a state in balls")
    p.add_argument("--kernel")
    p.add_argument("--state")
    p.add_argument("--radii", type=float, nargs="+")
    p.add_argument("--method", choices=["auto", "tensor", "bessel", "qmc"])
    p.add_argument("--output")
    p = add("plss", "point-localized state sequence")
    p.add_argument("--kernel")
    p.add_argument("--ns", type=float, nargs="+")
    p.add_argument("--radius", type=float)
    p.add_argument("--method", choices=["auto", "tensor", "bessel", "qmc"])
    p.add_argument("--output")
    p = add("norm-bound", "Rayleigh-Ritz lower bounds for the norm of T(B)")
    p.add_argument("--kernel")
    p.add_argument("--radius", type=float)
    p.add_argument("--sizes", type=int, nargs="+")
    p.add_argument("--output")
    p = add("onedim", "Gaussian-profile counterexample in one dimension")
    p.add_argument("--varsigma", type=float)
    p.add_argument("--output")

    p = sub.add_parser("suite", parents=[common], help="run a named check suite")
    p.add_argument("name", choices=suites.SUITES + ("all",))
    p.set_defaults(func=run_suite)
    p = sub.add_parser("report", parents=[common], help="summarize a run log")
    p.add_argument("logfile")
    p.set_defaults(func=run_report)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
