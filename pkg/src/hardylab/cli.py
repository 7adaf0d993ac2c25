"""Command-line front end.

Subcommands ``verify``, ``sweep``, ``optimize``, ``counterexample`` and
``report`` read a TOML config (see the README for the schema), run the
requested instances and write JSON reports, an aggregate CSV and
two-column ``.dat`` files into the output directory.

Exit status: 0 all good, 2 some margin below tolerance (or a probe
classification disagreeing with the analytic threshold), 3 numerical
failures, 4 invalid configuration (nothing written).
"""

from __future__ import annotations

import argparse
import csv
import datetime as _dt
import io
import itertools
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .errors import ConfigInvalid, HardyLabError, IncompatibleCase
from .geometry import make_domain, make_two_graph
from .inequalities import Kind, evaluate_case, make_case
from .probe import FitAmbiguous, default_eps, divergence_scan
from .testfn import Plateau, bump_suite, make_testfn
from .weights import Family, Monotonicity, make_weight

EXIT_OK, EXIT_VIOLATION, EXIT_NUMERIC, EXIT_CONFIG = 0, 2, 3, 4

CSV_COLUMNS = [
    "id", "kind", "weight", "domain", "p", "N", "params", "u_index", "seed",
    "lhs", "rhs", "margin", "ratio", "error_bar", "degenerate", "violated", "status",
]

SECTIONS = {
    "case": {"kind", "p", "gamma", "s", "q", "orientation", "coefficient", "C1", "c1"},
    "weight": {"name", "gamma", "beta", "eps0", "p"},
    "domain": {"psi", "N", "a", "k", "shift", "lower", "upper"},
    "testfns": {"family", "count", "seed", "R_range", "xprime_range", "xn_range", "xn_base", "items",
                "r_inner", "r_outer", "center", "knots", "coeffs", "cutoff", "log_knots", "envelope", "offset"},
    "quad": {"tol", "max_cells"},
    "output": {"dir", "csv", "reports"},
    "optimize": {"target", "p", "gamma", "budget", "seed", "n_coeffs", "span", "L", "M", "pair", "bc", "A_grid",
                 "reduce_1d", "restarts"},
    "counterexample": {"gamma", "p", "N", "k_min", "k_max", "r_inner", "r_outer"},
}
REQUIRED_MONOTONICITY = {
    Kind.HARDY_I: Monotonicity.INCREASING,
    Kind.HALF_SPACE_HARDY_I: Monotonicity.INCREASING,
    Kind.HARDY_II: Monotonicity.DECREASING,
    Kind.TWO_GRAPH: Monotonicity.INCREASING,
    Kind.W1P: Monotonicity.INCREASING,
}
GRID_KEYS = {("case", "p"), ("case", "gamma"), ("case", "s"), ("case", "q"),
             ("weight", "gamma"), ("weight", "beta"), ("weight", "eps0")}


# --------------------------------------------------------------------------
# config


def load_config(path) -> dict:
    try:
        with open(path, "rb") as fh:
            cfg = tomllib.load(fh)
    except FileNotFoundError:
        raise ConfigInvalid("--config", f"file not found: {path}") from None
    except tomllib.TOMLDecodeError as e:
        raise ConfigInvalid("--config", f"not valid TOML: {e}") from None
    for sec, body in cfg.items():
        if sec not in SECTIONS:
            raise ConfigInvalid(sec, "unknown section")
        if not isinstance(body, dict):
            raise ConfigInvalid(sec, "must be a table")
        for key in body:
            if key not in SECTIONS[sec]:
                raise ConfigInvalid(f"{sec}.{key}", "unknown key")
    return cfg


def _num(cfg, sec, key, default=None, grid=False, kind=float):
    v = cfg.get(sec, {}).get(key, default)
    if v is None:
        return None
    vals = v if isinstance(v, list) else [v]
    if isinstance(v, list) and not ((sec, key) in GRID_KEYS or grid):
        raise ConfigInvalid(f"{sec}.{key}", "a single value is expected")
    if not vals:
        raise ConfigInvalid(f"{sec}.{key}", "empty grid")
    out = []
    for x in vals:
        if isinstance(x, bool) or not isinstance(x, (int, float)) or not math.isfinite(x):
            raise ConfigInvalid(f"{sec}.{key}", f"expected a finite number, got {x!r}")
        out.append(kind(x))
    return out if isinstance(v, list) else out[0]


def _as_list(v):
    return v if isinstance(v, list) else [v]


def _seed(cfg, sec, override):
    if override is not None:
        return int(override)
    s = cfg.get(sec, {}).get("seed")
    if s is None:
        return None
    if isinstance(s, bool) or not isinstance(s, int) or s < 0:
        raise ConfigInvalid(f"{sec}.seed", "must be a nonnegative integer")
    return s


def _quad(cfg, tol_override):
    tol = tol_override if tol_override is not None else _num(cfg, "quad", "tol", 1e-6)
    if not tol > 0:
        raise ConfigInvalid("quad.tol", "must be positive")
    mc = _num(cfg, "quad", "max_cells", None, kind=int)
    if mc is not None and mc < 1:
        raise ConfigInvalid("quad.max_cells", "must be positive")
    return {"tol": float(tol), "max_cells": mc}


def _domain_desc(cfg, N):
    d = cfg.get("domain", {})
    desc = {"psi": d.get("psi", "zero"), "N": N}
    for key in ("a", "k", "shift"):
        if key in d:
            desc[key] = _num(cfg, "domain", key)
    return desc


def _build_domain(desc, key="domain"):
    try:
        return make_domain(desc.get("psi", "zero"), desc["N"], desc.get("a", 0.0), desc.get("k", 1.0), desc.get("shift", 0.0))
    except HardyLabError as e:
        raise ConfigInvalid(key + ".psi", str(e)) from None


def _domain_N(cfg):
    d = cfg.get("domain", {})
    N = d.get("N", 2)
    if isinstance(N, bool) or not isinstance(N, int):
        raise ConfigInvalid("domain.N", "must be an integer")
    if not 2 <= N <= 3:
        raise ConfigInvalid("domain.N", "N must be 2 or 3")
    return N


def _build_testfns(cfg, N, seed):
    t = cfg.get("testfns", {})
    fam = t.get("family", "bump")
    if fam not in ("bump", "plateau", "trial"):
        raise ConfigInvalid("testfns.family", f"unknown family {fam!r}")
    if "items" in t:
        items = t["items"]
        if not isinstance(items, list) or not items:
            raise ConfigInvalid("testfns.items", "must be a nonempty list of tables")
        out = []
        for i, it in enumerate(items):
            try:
                out.append(make_testfn(dict(it)))
            except (HardyLabError, TypeError, ValueError) as e:
                raise ConfigInvalid(f"testfns.items[{i}]", str(e)) from None
        return out
    try:
        if fam == "bump":
            count = _num(cfg, "testfns", "count", 10, kind=int)
            if count < 1:
                raise ConfigInvalid("testfns.count", "must be positive")
            if seed is None:
                raise ConfigInvalid("testfns.seed", "a seed is required for random bump suites")
            kw = {}
            for key in ("R_range", "xprime_range", "xn_range"):
                if key in t:
                    v = t[key]
                    if not (isinstance(v, list) and len(v) == 2 and all(isinstance(x, (int, float)) for x in v)):
                        raise ConfigInvalid(f"testfns.{key}", "must be a pair of numbers")
                    kw[key] = (float(v[0]), float(v[1]))
            if "xn_base" in t:
                kw["xn_base"] = _num(cfg, "testfns", "xn_base")
            return bump_suite(N, count, seed, **kw)
        if fam == "plateau":
            center = t.get("center", [0.0] * N)
            return [make_testfn({"family": "plateau", "r_inner": t.get("r_inner", 1.0),
                                 "r_outer": t.get("r_outer", 2.0), "center": center})]
        desc = {k: t[k] for k in ("knots", "coeffs", "cutoff", "log_knots", "envelope", "offset") if k in t}
        return [make_testfn({"family": "trial", "N": N, **desc})]
    except ConfigInvalid:
        raise
    except (HardyLabError, TypeError, ValueError) as e:
        raise ConfigInvalid(f"testfns.{fam}", str(e)) from None


def _grid(cfg, sec, keys):
    axes = []
    for key in keys:
        v = cfg.get(sec, {}).get(key)
        if v is None:
            continue
        vals = _num(cfg, sec, key)
        axes.append([(sec, key, x) for x in _as_list(vals)])
    return [list(c) for c in itertools.product(*axes)] if axes else [[]]


def build_instances(cfg, seed_override=None, tol_override=None):
    """Expand the config into a list of picklable instance descriptors.

    Every object is constructed once here so that configuration errors
    surface as :class:`ConfigInvalid` before anything is written.
    """
    case_cfg = cfg.get("case")
    if not case_cfg or "kind" not in case_cfg:
        raise ConfigInvalid("case.kind", "missing")
    try:
        kind = Kind(case_cfg["kind"])
    except ValueError:
        raise ConfigInvalid("case.kind", f"unknown kind {case_cfg['kind']!r}") from None
    N = _domain_N(cfg)
    quad = _quad(cfg, tol_override)
    seed = _seed(cfg, "testfns", seed_override)
    tests = _build_testfns(cfg, N, seed)
    for u in tests:
        if u.N != N:
            raise ConfigInvalid("testfns", f"test function dimension {u.N} differs from domain.N = {N}")

    wcfg = cfg.get("weight", {})
    needs_weight = kind not in (Kind.SINGULAR_HARDY, Kind.HSM)
    if needs_weight and "name" not in wcfg:
        raise ConfigInvalid("weight.name", "missing")
    if "name" in wcfg:
        try:
            Family(wcfg["name"])
        except ValueError:
            raise ConfigInvalid("weight.name", f"unknown weight {wcfg['name']!r}") from None

    if kind == Kind.TWO_GRAPH:
        d = cfg.get("domain", {})
        if not isinstance(d.get("lower"), dict) or not isinstance(d.get("upper"), dict):
            raise ConfigInvalid("domain.lower", "two_graph needs [domain.lower] and [domain.upper] tables")
        dom_desc = {"lower": {**d["lower"], "N": N}, "upper": {**d["upper"], "N": N}}
        try:
            make_two_graph(_build_domain(dom_desc["lower"], "domain.lower"), _build_domain(dom_desc["upper"], "domain.upper"))
        except ConfigInvalid:
            raise
        except HardyLabError as e:
            raise ConfigInvalid("domain.upper", str(e)) from None
    else:
        dom_desc = _domain_desc(cfg, N)
        _build_domain(dom_desc)

    ps = _as_list(_num(cfg, "case", "p", 2.0))
    case_grid = _grid(cfg, "case", ["gamma", "s", "q"])
    weight_grid = _grid(cfg, "weight", ["gamma", "beta", "eps0"]) if needs_weight else [[]]
    instances = []
    for p in ps:
        if not p > 1:
            raise ConfigInvalid("case.p", "p > 1 required")
        for cg in case_grid:
            cparams = {k: v for _, k, v in cg}
            for key in ("orientation", "coefficient", "C1", "c1"):
                if key in case_cfg:
                    cparams[key] = case_cfg[key]
            try:
                make_case(kind, **cparams)
            except (HardyLabError, TypeError, ValueError) as e:
                raise ConfigInvalid("case", str(e)) from None
            for wg in weight_grid:
                wparams = {k: v for _, k, v in wg}
                if needs_weight:
                    if "p" in wcfg:
                        wparams["p"] = _num(cfg, "weight", "p")
                    elif wcfg["name"] == Family.DECREASING_SHIFTED_POWER.value:
                        wparams["p"] = p
                    try:
                        w = make_weight(wcfg["name"], N, **wparams)
                    except HardyLabError as e:
                        raise ConfigInvalid("weight", str(e)) from None
                    want = REQUIRED_MONOTONICITY.get(kind)
                    if want is not None and w.monotonicity != want:
                        raise ConfigInvalid("weight.name", f"{kind.value} needs a {want.value} weight, got {w.label()}")
                for i, u in enumerate(tests):
                    instances.append({
                        "kind": kind.value,
                        "case": cparams,
                        "weight": {"name": wcfg["name"], **wparams} if needs_weight else None,
                        "domain": dom_desc,
                        "p": p,
                        "N": N,
                        "u": u.describe(),
                        "u_index": i,
                        "seed": seed,
                        "quad": quad,
                        "sweep": {**{f"case.{k}": v for k, v in cparams.items() if isinstance(v, float)},
                                  **{f"weight.{k}": v for k, v in wparams.items()}, "case.p": p},
                    })
    for j, inst in enumerate(instances):
        inst["id"] = f"{j:05d}"
    return instances


def _rebuild_u(desc):
    d = dict(desc)
    if d.get("family") == "trial":
        d.pop("xprime_center", None)
    return make_testfn(d)


def run_instance(inst) -> dict:
    """Evaluate one instance; never raises for numerical failures."""
    kind = Kind(inst["kind"])
    case = make_case(kind, **inst["case"])
    N = inst["N"]
    weight = None
    if inst["weight"] is not None:
        w = dict(inst["weight"])
        weight = make_weight(w.pop("name"), N, **w)
    d = inst["domain"]
    if kind == Kind.TWO_GRAPH:
        domain = make_two_graph(_build_domain(d["lower"]), _build_domain(d["upper"]))
    else:
        domain = _build_domain(d)
    u = _rebuild_u(inst["u"])
    row = {
        "id": inst["id"], "kind": inst["kind"],
        "weight": "" if weight is None else weight.label(),
        "domain": json.dumps(d, sort_keys=True), "p": inst["p"], "N": N,
        "params": json.dumps(inst["case"], sort_keys=True), "u_index": inst["u_index"],
        "seed": "" if inst["seed"] is None else inst["seed"],
    }
    try:
        rep = evaluate_case(case, weight, domain, u, inst["p"], inst["quad"]["tol"],
                            max_cells=inst["quad"]["max_cells"], seed=inst["seed"])
    except IncompatibleCase as e:
        row.update(status=f"incompatible: {e}", lhs="", rhs="", margin="", ratio="", error_bar="", degenerate="", violated="")
        return {"row": row, "report": None, "outcome": "failure"}
    except HardyLabError as e:
        row.update(status=f"{type(e).__name__}: {e}", lhs="", rhs="", margin="", ratio="", error_bar="", degenerate="", violated="")
        return {"row": row, "report": None, "outcome": "failure"}
    violated = rep.violated()
    row.update(
        lhs=repr(rep.lhs_total), rhs=repr(rep.rhs_total),
        margin="" if rep.margin is None else repr(rep.margin),
        ratio="" if rep.ratio is None else repr(rep.ratio),
        error_bar=repr(rep.error_bar), degenerate=str(rep.degenerate).lower(),
        violated=str(violated).lower(), status="ok",
    )
    outcome = "violation" if violated else ("degenerate" if rep.degenerate else "ok")
    return {"row": row, "report": rep.to_dict(), "outcome": outcome, "sweep": inst["sweep"], "margin": rep.margin}


def _map(fn, items, workers):
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, items, chunksize=max(1, len(items) // (4 * workers))))


# --------------------------------------------------------------------------
# output


def _timestamp():
    return _dt.datetime.now(_dt.timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def write_csv(path: Path, columns, rows):
    buf = io.StringIO()
    buf.write(f"# generated {_timestamp()}\n")
    w = csv.DictWriter(buf, fieldnames=columns, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: r.get(k, "") for k in columns})
    path.write_text(buf.getvalue())


def write_dat(path: Path, header, pairs):
    lines = [f"# {header}"] + [f"{x!r} {y!r}" for x, y in pairs]
    path.write_text("\n".join(lines) + "\n")


def _outdir(cfg, args):
    if args.out:
        return Path(args.out)
    return Path(cfg.get("output", {}).get("dir", "hardylab_out"))


def _summarize(label, results):
    counts = {k: 0 for k in ("ok", "degenerate", "violation", "failure")}
    for r in results:
        counts[r["outcome"]] += 1
    print(f"{label}: {len(results)} instances, {counts['ok']} ok, {counts['degenerate']} degenerate, "
          f"{counts['violation']} violations, {counts['failure']} failures")
    if counts["violation"]:
        return EXIT_VIOLATION
    if counts["failure"]:
        return EXIT_NUMERIC
    return EXIT_OK


def _write_reports(out: Path, cfg, results):
    out.mkdir(parents=True, exist_ok=True)
    rep_dir = out / cfg.get("output", {}).get("reports", "reports")
    rep_dir.mkdir(exist_ok=True)
    for r in results:
        body = r["report"] if r["report"] is not None else {"status": r["row"]["status"], "id": r["row"]["id"]}
        (rep_dir / f"{r['row']['id']}.json").write_text(json.dumps(body, indent=2, sort_keys=True) + "\n")
    rows = sorted((r["row"] for r in results), key=lambda row: row["id"])
    write_csv(out / cfg.get("output", {}).get("csv", "results.csv"), CSV_COLUMNS, rows)


def cmd_verify(cfg, args, sweep=False):
    instances = build_instances(cfg, args.seed, args.tol)
    results = sorted(_map(run_instance, instances, args.workers), key=lambda r: r["row"]["id"])
    out = _outdir(cfg, args)
    _write_reports(out, cfg, results)
    if sweep:
        keys = sorted({k for r in results if "sweep" in r for k in r["sweep"]})
        for key in keys:
            vals = sorted({r["sweep"][key] for r in results if "sweep" in r})
            if len(vals) < 2:
                continue
            pairs = []
            for v in vals:
                ms = [r["margin"] for r in results if r.get("sweep", {}).get(key) == v and r.get("margin") is not None]
                if ms:
                    pairs.append((v, min(ms)))
            write_dat(out / f"margin_vs_{key.replace('.', '_')}.dat", f"{key} min_margin", pairs)
    return _summarize("sweep" if sweep else "verify", results)


def cmd_counterexample(cfg, args):
    c = cfg.get("counterexample", {})
    gammas = _as_list(_num(cfg, "counterexample", "gamma", 0.0, grid=True))
    ps = _as_list(_num(cfg, "counterexample", "p", 2.0, grid=True))
    N = _num(cfg, "counterexample", "N", 2, kind=int)
    if N not in (2, 3):
        raise ConfigInvalid("counterexample.N", "N must be 2 or 3")
    kmin = _num(cfg, "counterexample", "k_min", 4, kind=int)
    kmax = _num(cfg, "counterexample", "k_max", 14, kind=int)
    if kmin < 0 or kmax - kmin < 4:
        raise ConfigInvalid("counterexample.k_max", "need at least 5 eps values")
    ri, ro = c.get("r_inner", 1.0), c.get("r_outer", 2.0)
    if not 0 < ri < ro:
        raise ConfigInvalid("counterexample.r_inner", "need 0 < r_inner < r_outer")
    for p in ps:
        if not p > 1:
            raise ConfigInvalid("counterexample.p", "p > 1 required")
    jobs = [(g, p, N, kmin, kmax, float(ri), float(ro)) for p in ps for g in gammas]
    results = _map(_scan_job, jobs, args.workers)
    out = _outdir(cfg, args)
    out.mkdir(parents=True, exist_ok=True)
    rows = []
    status = EXIT_OK
    for i, r in enumerate(results):
        tag = f"scan_{i:03d}"
        rep = r["report"]
        if rep is not None:
            write_dat(out / f"{tag}.dat", "eps integral", zip(rep["eps_values"], rep["integrals"]))
        if r["error"]:
            status = max(status, EXIT_NUMERIC) if status != EXIT_VIOLATION else status
        elif not rep["agrees"]:
            status = EXIT_VIOLATION
        rows.append({
            "id": tag, "gamma": r["gamma"], "p": r["p"],
            "classification": "" if rep is None or rep["classification"] is None else rep["classification"],
            "label": r["label"], "fitted_exponent": "" if rep is None else repr(rep["fitted_exponent"]),
            "fit_residual": "" if rep is None else repr(rep["fit_residual"]),
            "limit": "" if rep is None or rep["limit"] is None else repr(rep["limit"]),
            "regime": "" if rep is None else rep["regime"],
            "agrees": "" if rep is None or rep["agrees"] is None else str(rep["agrees"]).lower(),
            "status": r["error"] or "ok",
        })
    (out / "classification.json").write_text(json.dumps([
        {"id": row["id"], **{k: r[k] for k in ("gamma", "p", "label", "error")}, "report": r["report"]}
        for row, r in zip(rows, results)
    ], indent=2, sort_keys=True) + "\n")
    write_csv(out / "counterexample.csv", list(rows[0].keys()), rows)
    bad = sum(1 for r in rows if r["status"] != "ok" or r["agrees"] == "false")
    print(f"counterexample: {len(rows)} scans, {len(rows) - bad} classified in agreement")
    for row in rows:
        print(f"  gamma={row['gamma']:g} p={row['p']:g}: {row['label']}")
    return status


def _scan_job(job):
    g, p, N, kmin, kmax, ri, ro = job
    u = Plateau(ri, ro, tuple([0.0] * N))
    try:
        rep = divergence_scan(g, p, u, default_eps(kmin, kmax))
        return {"gamma": g, "p": p, "report": rep.to_dict(), "label": rep.label(), "error": ""}
    except FitAmbiguous as e:
        return {"gamma": g, "p": p, "report": e.report.to_dict() if e.report else None, "label": "FitAmbiguous",
                "error": f"FitAmbiguous: {e}"}
    except HardyLabError as e:
        return {"gamma": g, "p": p, "report": None, "label": type(e).__name__, "error": f"{type(e).__name__}: {e}"}


def cmd_optimize(cfg, args):
    from .optimize import BC, RayleighProblem, Weight1D, ab_pareto, eig_best_constant_1d, hardy_1d_problem, minimize_ratio

    o = cfg.get("optimize", {})
    target = o.get("target", "hardy_1d")
    if target not in ("hardy_1d", "case", "eig", "pareto"):
        raise ConfigInvalid("optimize.target", f"unknown target {target!r}")
    seed = _seed(cfg, "optimize", args.seed)
    out = _outdir(cfg, args)
    if target in ("hardy_1d", "case"):
        budget = _num(cfg, "optimize", "budget", 2000, kind=int)
        if budget < 0:
            raise ConfigInvalid("optimize.budget", "must be >= 0")
        if seed is None:
            raise ConfigInvalid("optimize.seed", "a seed is required for randomized restarts")
        if target == "hardy_1d":
            p = _num(cfg, "optimize", "p", 2.0)
            if not p > 1:
                raise ConfigInvalid("optimize.p", "p > 1 required")
            span = o.get("span", [-20.0, 20.0])
            if not (isinstance(span, list) and len(span) == 2 and span[0] < span[1]):
                raise ConfigInvalid("optimize.span", "must be an increasing pair")
            n = _num(cfg, "optimize", "n_coeffs", 14, kind=int)
            if n < 2:
                raise ConfigInvalid("optimize.n_coeffs", "at least 2 coefficients")
            problem = hardy_1d_problem(p, _num(cfg, "optimize", "gamma", 0.0), n, tuple(span))
        else:
            inst = build_instances({**cfg, "testfns": {**cfg.get("testfns", {}), "family": "trial"}},
                                   seed, args.tol)[0]
            if inst["kind"] == Kind.TWO_GRAPH.value:
                raise ConfigInvalid("case.kind", "two_graph has no optimization target")
            w = None
            if inst["weight"] is not None:
                wd = dict(inst["weight"])
                w = make_weight(wd.pop("name"), inst["N"], **wd)
            try:
                problem = RayleighProblem(make_case(inst["kind"], **inst["case"]), _rebuild_u(inst["u"]), inst["p"], w,
                                          _build_domain(inst["domain"]), reduce_1d=bool(o.get("reduce_1d", False)),
                                          tol=inst["quad"]["tol"])
            except HardyLabError as e:
                raise ConfigInvalid("optimize", str(e)) from None
        try:
            res = minimize_ratio(problem, budget, seed)
        except HardyLabError as e:
            print(f"optimize: {type(e).__name__}: {e}")
            return EXIT_NUMERIC
        out.mkdir(parents=True, exist_ok=True)
        (out / "optimize.json").write_text(json.dumps(res.to_dict(), indent=2, sort_keys=True, default=str) + "\n")
        write_dat(out / "history.dat", "evaluation best_ratio", enumerate(res.history))
        print(f"optimize: best_ratio {res.best_ratio:.6g} after {res.evaluations} evaluations"
              + (" (flagged: below the proven bound)" if res.flagged else ""))
        return EXIT_VIOLATION if res.flagged else EXIT_OK
    if target == "eig":
        pair = o.get("pair", "hardy")
        L = _num(cfg, "optimize", "L", 50.0)
        M = _num(cfg, "optimize", "M", 4000, kind=int)
        try:
            bc = BC(o.get("bc", "dirichlet_at_zero"))
        except ValueError:
            raise ConfigInvalid("optimize.bc", "dirichlet_at_zero or free") from None
        if pair == "hardy":
            w1 = Weight1D.hardy()
        elif pair == "constant":
            w1 = Weight1D.constant()
        elif pair == "power":
            w1 = Weight1D.power(_num(cfg, "optimize", "gamma", 0.0))
        elif pair == "weight":
            N = _domain_N(cfg)
            wcfg = dict(cfg.get("weight", {}))
            try:
                w1 = Weight1D.from_weight(make_weight(wcfg.pop("name", None), N, **wcfg))
            except (HardyLabError, ValueError) as e:
                raise ConfigInvalid("weight", str(e)) from None
        else:
            raise ConfigInvalid("optimize.pair", f"unknown pair {pair!r}")
        if not (L > 0 and M >= 16):
            raise ConfigInvalid("optimize.M", "need L > 0 and M >= 16")
        try:
            lam, vec = eig_best_constant_1d(w1, bc, L, M)
        except HardyLabError as e:
            print(f"optimize: {type(e).__name__}: {e}")
            return EXIT_NUMERIC
        from .optimize import fem_grid

        t = fem_grid(L, M, "geometric" if w1.singular_at_zero else "uniform")
        out.mkdir(parents=True, exist_ok=True)
        (out / "eig.json").write_text(json.dumps({"pair": w1.name, "bc": bc.value, "L": L, "M": M, "lambda_min": lam},
                                                 indent=2, sort_keys=True) + "\n")
        write_dat(out / "eigvector.dat", "t u", zip(t.tolist(), vec.tolist()))
        print(f"optimize: lambda_min {lam:.8g} ({w1.name}, L={L:g}, M={M})")
        return EXIT_OK
    # pareto
    A_grid = _as_list(_num(cfg, "optimize", "A_grid", [0.5, 1.0, 2.0, 4.0, 8.0], grid=True))
    if any(b <= a for a, b in zip(A_grid, A_grid[1:])) or min(A_grid) < 0:
        raise ConfigInvalid("optimize.A_grid", "must be nonnegative and increasing")
    insts = build_instances(cfg, seed, args.tol)
    if insts[0]["kind"] != Kind.HARDY_II.value:
        raise ConfigInvalid("case.kind", "the Pareto target needs hardy_ii")
    first = insts[0]
    wd = dict(first["weight"])
    weight = make_weight(wd.pop("name"), first["N"], **wd)
    trials = [_rebuild_u(i["u"]) for i in insts if i["p"] == first["p"]]
    try:
        pts = ab_pareto(make_case("hardy_ii"), A_grid, trials, weight, _build_domain(first["domain"]), first["p"],
                        first["quad"]["tol"])
    except HardyLabError as e:
        print(f"optimize: {type(e).__name__}: {e}")
        return EXIT_NUMERIC
    out.mkdir(parents=True, exist_ok=True)
    rows = [{"A": repr(pt.A), "B_min": repr(pt.B_min) if math.isfinite(pt.B_min) else "inf", "flag": pt.flag}
            for pt in pts]
    write_csv(out / "pareto.csv", ["A", "B_min", "flag"], rows)
    write_dat(out / "pareto.dat", "A B_min", [(pt.A, pt.B_min) for pt in pts if math.isfinite(pt.B_min)])
    print("optimize: pareto " + ", ".join(f"A={pt.A:g}: {pt.B_min:.4g} ({pt.flag})" for pt in pts))
    return EXIT_OK


def cmd_report(args):
    out = Path(args.out or "hardylab_out")
    rep_dir = out / "reports"
    files = sorted(rep_dir.glob("*.json")) if rep_dir.is_dir() else []
    if not files:
        raise ConfigInvalid("--out", f"no reports found under {rep_dir}")
    counts = {"ok": 0, "degenerate": 0, "violation": 0, "failure": 0}
    worst = None
    for f in files:
        d = json.loads(f.read_text())
        if "terms" not in d:
            counts["failure"] += 1
            continue
        viol = d["margin"] is not None and not d["degenerate"] and d["margin"] < -max(1e-6 * abs(d["rhs_total"]), d["error_bar"])
        key = "violation" if viol else ("degenerate" if d["degenerate"] else "ok")
        counts[key] += 1
        if d["margin"] is not None and not d["degenerate"]:
            rel = d["margin"] / max(abs(d["rhs_total"]), 1e-300)
            if worst is None or rel < worst[0]:
                worst = (rel, f.stem, d["kind"])
    print(f"report: {len(files)} reports in {rep_dir}")
    for k, v in counts.items():
        print(f"  {k:10s} {v}")
    if worst is not None:
        print(f"  smallest relative margin {worst[0]:.3e} ({worst[2]}, id {worst[1]})")
    if counts["violation"]:
        return EXIT_VIOLATION
    return EXIT_NUMERIC if counts["failure"] else EXIT_OK


def build_parser():
    ap = argparse.ArgumentParser(prog="hardylab", description="Numerical checks of weighted Hardy-type inequalities.")
    sub = ap.add_subparsers(dest="command", required=True)
    for name, help_ in [
        ("verify", "evaluate every instance of a case and check the margins"),
        ("sweep", "like verify, plus margin-vs-parameter .dat files"),
        ("optimize", "best-constant searches: Rayleigh minimization, 1D eigenvalue, (A, B) frontier"),
        ("counterexample", "divergence scans of the singular left-hand side"),
        ("report", "summarize the JSON reports in an output directory"),
    ]:
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("--config", required=name != "report", help="TOML config file")
        sp.add_argument("--out", help="output directory (overrides output.dir)")
        sp.add_argument("--workers", type=int, default=1, help="worker processes")
        sp.add_argument("--seed", type=int, help="seed overriding the config")
        sp.add_argument("--tol", type=float, help="quadrature tolerance overriding quad.tol")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.workers < 1:
            raise ConfigInvalid("--workers", "must be >= 1")
        if args.seed is not None and args.seed < 0:
            raise ConfigInvalid("--seed", "must be nonnegative")
        if args.tol is not None and not args.tol > 0:
            raise ConfigInvalid("--tol", "must be positive")
        if args.command == "report":
            return cmd_report(args)
        cfg = load_config(args.config)
        if args.command == "verify":
            return cmd_verify(cfg, args)
        if args.command == "sweep":
            return cmd_verify(cfg, args, sweep=True)
        if args.command == "counterexample":
            return cmd_counterexample(cfg, args)
        return cmd_optimize(cfg, args)
    except ConfigInvalid as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
