"""Command-line entry point: config parsing, dispatch and report files."""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

import numpy as np
import yaml

from . import approx, continuation, lift, oracle, stationarity
from .expr import ExpressionError, compile_expression
from .functions import constant
from .model import Flavor, HeavisideTerm, PolyhedralSet, ProblemSpec, Target, build_l0

FORMAT_VERSION = 1
OUTDIR_ENV = "HEAVISIDE_OPT_OUTDIR"
EXIT_OK, EXIT_VALIDATION, EXIT_NUMERICAL, EXIT_CERTIFICATE = 0, 2, 3, 4
MULTIPLIER_MODES = {"necessary": "Necessary", "sufficientB": "SufficientB", "sufficientC": "SufficientC"}


class ConfigError(ValueError):
    def __init__(self, message: str, path: str = "", line: Optional[int] = None):
        loc = []
        if path:
            loc.append(f"field '{path}'")
        if line is not None:
            loc.append(f"line {line}")
        super().__init__(f"{', '.join(loc)}: {message}" if loc else message)
        self.path = path
        self.line = line


# -- config parsing -------------------------------------------------------------------


class _Lines:
    """Maps dotted field paths to 1-based source lines of a composed YAML tree."""

    def __init__(self, root):
        self.root = root

    def __call__(self, path: str) -> Optional[int]:
        node = self.root
        if node is None:
            return None
        for part in [p for p in path.replace("]", "").replace("[", ".").split(".") if p]:
            if isinstance(node, yaml.MappingNode):
                nxt = next((v for k, v in node.value if k.value == part), None)
            elif isinstance(node, yaml.SequenceNode) and part.isdigit() and int(part) < len(node.value):
                nxt = node.value[int(part)]
            else:
                nxt = None
            if nxt is None:
                break
            node = nxt
        return node.start_mark.line + 1


def _vector(value, n, path, lines, fill):
    if value is None:
        return np.full(n, fill)
    if np.isscalar(value):
        value = [value] * n
    if len(value) != n:
        raise ConfigError(f"expected {n} entries, got {len(value)}", path, lines(path))
    return np.array([fill if v is None else float(v) for v in value], dtype=float)


def _expr(text, n, path, lines):
    try:
        return compile_expression(str(text), n)
    except ExpressionError as exc:
        raise ConfigError(str(exc), path, lines(path)) from None


def _terms(items, n, path, lines):
    out = []
    for i, item in enumerate(items or []):
        p = f"{path}[{i}]"
        if not isinstance(item, dict) or "inner" not in item:
            raise ConfigError("term needs an 'inner' expression", p, lines(p))
        flavor = str(item.get("flavor", "open")).lower()
        if flavor not in ("open", "closed"):
            raise ConfigError("flavor must be 'open' or 'closed'", f"{p}.flavor", lines(f"{p}.flavor"))
        mult = _expr(item.get("multiplier", 1), n, f"{p}.multiplier", lines)
        inner = _expr(item["inner"], n, f"{p}.inner", lines)
        out.append(HeavisideTerm(mult, inner, Flavor.OPEN if flavor == "open" else Flavor.CLOSED,
                                 str(item.get("label", f"{path}{i}"))))
    return out


@dataclass
class LoadedConfig:
    problem: ProblemSpec
    raw: dict
    tolerances: stationarity.Tolerances
    family: object


def parse_config(text: str, source: str = "<config>") -> LoadedConfig:
    try:
        root = yaml.compose(text)
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        raise ConfigError(f"YAML syntax error: {getattr(exc, 'problem', exc)}", "",
                          mark.line + 1 if mark else None) from None
    lines = _Lines(root)
    if not isinstance(data, dict):
        raise ConfigError("top level must be a mapping")
    if "dimension" not in data:
        raise ConfigError("missing required field", "dimension")
    n = data["dimension"]
    if not isinstance(n, int) or n < 1:
        raise ConfigError("dimension must be a positive integer", "dimension", lines("dimension"))
    bounds = data.get("bounds", {}) or {}
    lower = _vector(bounds.get("lower"), n, "bounds.lower", lines, -np.inf)
    upper = _vector(bounds.get("upper"), n, "bounds.upper", lines, np.inf)
    if np.any(lower > upper):
        raise ConfigError("lower bound above upper bound", "bounds", lines("bounds"))
    rows, rhs = [], []
    for i, ineq in enumerate(data.get("inequalities", []) or []):
        p = f"inequalities[{i}]"
        try:
            rows.append(_vector(ineq["coefficients"], n, f"{p}.coefficients", lines, 0.0))
            rhs.append(float(ineq["rhs"]))
        except (KeyError, TypeError):
            raise ConfigError("inequality needs 'coefficients' and 'rhs'", p, lines(p)) from None
    try:
        X = PolyhedralSet(n, np.array(rows).reshape(-1, n), np.array(rhs), lower, upper)
    except ValueError as exc:
        raise ConfigError(str(exc), "inequalities", lines("inequalities")) from None
    cost = _expr(data.get("cost", 0), n, "cost", lines)
    obj = _terms(data.get("objective_terms"), n, "objective_terms", lines)
    con = _terms(data.get("constraint_terms"), n, "constraint_terms", lines)
    if "l0" in data:
        spec = data["l0"] or {}
        target = str(spec.get("target", "objective"))
        try:
            terms = build_l0(spec.get("weights", []), Target(target))
        except ValueError as exc:
            raise ConfigError(str(exc), "l0.weights", lines("l0.weights")) from None
        if len(spec.get("weights", [])) != n:
            raise ConfigError(f"expected {n} weights", "l0.weights", lines("l0.weights"))
        (obj if target == "objective" else con).extend(terms)
    if con and "budget" not in data:
        raise ConfigError("constraint terms need a 'budget'", "budget")
    budget = float(data.get("budget", 0.0))
    problem = ProblemSpec(cost, obj, con, budget, X, str(data.get("name", Path(source).stem)))
    tol_fields = data.get("tolerances", {}) or {}
    try:
        tol = replace(stationarity.DEFAULT_TOL, **tol_fields)
    except TypeError as exc:
        raise ConfigError(str(exc), "tolerances", lines("tolerances")) from None
    try:
        fam = approx.family_from_spec(data.get("family", "modified-hinge"))
    except ValueError as exc:
        raise ConfigError(str(exc), "family", lines("family")) from None
    return LoadedConfig(problem, data, tol, fam)


def load_config(path: str) -> LoadedConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc.strerror}") from None
    return parse_config(text, path)


# -- output helpers ---------------------------------------------------------------------


def _num(v):
    if v is None:
        return None
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    v = float(v)
    if not np.isfinite(v):
        return "inf" if v > 0 else ("-inf" if v < 0 else "nan")
    return float(f"{v:.12g}")


def _vec(x):
    return None if x is None else [_num(v) for v in np.ravel(x)]


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.12g}"
    return str(v)


@dataclass
class RunConfig:
    problem_path: Optional[str]
    command: str
    options: dict = field(default_factory=dict)
    outdir: Optional[str] = None
    seed: int = 0
    threads: int = 1
    assert_mode: bool = False


class Reporter:
    def __init__(self, outdir: Path, command: str):
        self.outdir = outdir
        self.command = command
        self.summary = {"format_version": FORMAT_VERSION, "command": command}
        self.files = []

    def table(self, name: str, header, rows):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_fmt(v) for v in r])
        self.outdir.mkdir(parents=True, exist_ok=True)
        path = self.outdir / f"{name}.csv"
        path.write_text(buf.getvalue())
        self.files.append(path.name)

    def write(self):
        self.outdir.mkdir(parents=True, exist_ok=True)
        self.summary["tables"] = sorted(self.files)
        (self.outdir / f"{self.command}-summary.json").write_text(
            json.dumps(self.summary, indent=2, sort_keys=True) + "\n")


def _point(text, n):
    try:
        vals = [float(v) for v in str(text).replace(" ", "").split(",") if v != ""]
    except ValueError:
        raise ConfigError(f"cannot parse point {text!r}", "--at") from None
    if len(vals) != n:
        raise ConfigError(f"point needs {n} coordinates", "--at")
    return np.array(vals)


def _cert_dict(cert):
    if cert is None:
        return None
    return {
        "property": "pseudo-b-stationarity",
        "verdict": cert.verdict,
        "method": cert.method,
        "acq_evidence": cert.acq_evidence,
        "dd_value": _num(cert.dd_value),
        "witness": _vec(cert.witness),
        "convex_like": bool(cert.convex_like),
        "reason": cert.reason,
        "summary": cert.summary,
    }


def _safe_certificate(problem, x, tol):
    try:
        return stationarity.check_pseudo_b_stationary(problem, x, tol)
    except ValueError as exc:
        return stationarity.StationarityCertificate(np.asarray(x, float), stationarity.INCONCLUSIVE,
                                                    "None", "None", reason=str(exc))


# -- commands -----------------------------------------------------------------------------


def cmd_validate(cfg: LoadedConfig, rc: RunConfig, rep: Reporter) -> int:
    p = cfg.problem
    canon = p.canonical()
    rep.summary["problem"] = {"name": p.name, "dimension": p.dimension, "K": p.K, "L": p.L,
                              "canonical_K": canon.K, "canonical_L": canon.L, "budget": _num(p.budget),
                              "bounded": bool(p.feasible_set.is_bounded)}
    rows = []
    for mode in ("A", "B"):
        sign = stationarity.check_sign_conditions(canon, mode)
        rep.summary[f"sign_condition_{mode}"] = {"property": f"sign-condition-{mode}", "passed": sign.passed,
                                                 "heuristic": sign.heuristic}
        for r in sign.rows:
            rows.append((f"sign-condition-{mode}", r.kind, r.index, r.label, r.method, r.min_value,
                         "pass" if r.passed else "fail"))
    rep.table("sign-conditions", ["property", "kind", "index", "label", "method", "min_multiplier", "status"], rows)
    print(f"{p.name}: n={p.dimension} K={p.K} L={p.L} (canonical K={canon.K} L={canon.L})")
    for mode in ("A", "B"):
        s = rep.summary[f"sign_condition_{mode}"]
        print(f"  sign condition {mode}: {'pass' if s['passed'] else 'fail'}{' (sampled)' if s['heuristic'] else ''}")
    return EXIT_OK


def cmd_check(cfg, rc, rep) -> int:
    p = cfg.problem
    x = _point(rc.options["at"], p.dimension)
    cert = _safe_certificate(p, x, cfg.tolerances)
    rep.summary["point"] = _vec(x)
    rep.summary["certificate"] = _cert_dict(cert)
    print(f"certificate at {_vec(x)}: {cert.summary}")
    return EXIT_CERTIFICATE if rc.assert_mode and not cert.passed else EXIT_OK


def cmd_multipliers(cfg, rc, rep) -> int:
    p = cfg.problem
    x = _point(rc.options["at"], p.dimension)
    mode = MULTIPLIER_MODES[rc.options.get("mode", "necessary")]
    r = stationarity.enumerate_multiplier_family(p, x, mode, cfg.tolerances, rc.threads)
    rep.summary["multipliers"] = {"property": f"multiplier-family-{mode}", "mode": mode,
                                  "aggregate": bool(r.aggregate), "precondition": r.precondition,
                                  "precondition_note": r.precondition_note,
                                  "k_zero": list(r.k_zero), "l_zero": list(r.l_zero)}
    rows = [("".join(map(str, row.xi)), "".join(map(str, row.mu)), row.certificate.verdict, row.certificate.dd_value)
            for row in r.rows]
    rep.table("multipliers", ["xi", "mu", "verdict", "dd_value"], rows)
    print(f"{mode}: aggregate {'pass' if r.aggregate else 'fail'} over {len(r.rows)} patterns")
    for row in rows:
        print(f"  xi={row[0] or '-'} mu={row[1] or '-'}: {row[2]}")
    return EXIT_CERTIFICATE if rc.assert_mode and not r.aggregate else EXIT_OK


def _run_lift(cfg, rc):
    lam_opt = rc.options.get("lambda", "auto")
    lam = None if lam_opt in (None, "auto") else float(lam_opt)
    return lift.solve_lifted(cfg.problem, lam, int(rc.options.get("branch_budget", 4096)),
                             tol=cfg.tolerances, threads=rc.threads, seed=rc.seed)


def cmd_lift(cfg, rc, rep) -> int:
    try:
        res = _run_lift(cfg, rc)
    except lift.BranchBudgetExceeded as exc:
        raise ConfigError(str(exc), "--branch-budget") from None
    _lift_report(res, rep)
    print(f"lift (lambda={res.penalty:.6g}): value {res.objective:.10g} at {_vec(res.x)}")
    if res.recovery is not None:
        print(f"  recovered t={_vec(res.t)} s={_vec(res.s)} case ({res.recovery.case}), {res.recovery.feasibility}")
    if res.certificate is not None:
        print(f"  certificate: {res.certificate.summary}")
    for note in res.notes:
        print(f"  note: {note}")
    if res.x is None or not any(b.stationary for b in res.branches):
        return EXIT_NUMERICAL
    if rc.assert_mode and (res.certificate is None or not res.certificate.passed):
        return EXIT_CERTIFICATE
    return EXIT_OK


def _lift_report(res, rep):
    rep.summary["lift"] = {
        "property": "epigraph-recovery",
        "penalty": _num(res.penalty),
        "x": _vec(res.x), "t": _vec(res.t), "s": _vec(res.s),
        "branch": list(res.branch) if res.branch else None,
        "objective": _num(res.objective),
        "ties": [list(t) for t in res.ties],
        "case": res.recovery.case if res.recovery else None,
        "feasibility": res.recovery.feasibility if res.recovery else None,
        "certificate": _cert_dict(res.certificate),
        "notes": list(res.notes),
    }
    rows = [(b.index, "/".join(b.assignment), b.status, b.objective,
             " ".join(_fmt(v) for v in (b.x if b.x is not None else [])), b.iterations) for b in res.branches]
    rep.table("lift-branches", ["index", "assignment", "status", "objective", "x", "iterations"], rows)


def _starts(problem, k, seed):
    X = problem.feasible_set
    pts = [X.center()]
    rng = np.random.default_rng(seed)
    tries = 0
    while len(pts) < k and tries < 1000 and X.is_bounded:
        tries += 1
        cand = X.lower + (X.upper - X.lower) * rng.random(problem.dimension)
        if X.contains(cand):
            pts.append(cand)
    return pts


def _run_continuation(cfg, rc):
    p = cfg.problem
    fam = approx.family_from_spec(rc.options["family"]) if rc.options.get("family") else cfg.family
    sched = continuation.Schedule(float(rc.options.get("delta0", 0.5)), float(rc.options.get("rho", 0.5)),
                                  int(rc.options.get("stages", 24)))
    lam_opt = rc.options.get("lambda", "auto")
    lam = None if lam_opt in (None, "auto") else float(lam_opt)
    best = None
    for x0 in _starts(p, int(rc.options.get("starts", 1)), rc.seed):
        tr = continuation.run_continuation(p, fam, lam, sched, x0, tol=cfg.tolerances)
        val = tr.limit_value
        key = (not tr.limit_feasible, val)
        if best is None or key < best[0]:
            best = (key, tr, val)
    return best[1], best[2], fam, sched


def cmd_approx_solve(cfg, rc, rep) -> int:
    tr, val, fam, sched = _run_continuation(cfg, rc)
    cert = _safe_certificate(cfg.problem, tr.limit, cfg.tolerances) if tr.limit_feasible else None
    diag = continuation.diagnose_conditions(tr, cfg.problem, cfg.tolerances, sched)
    _continuation_report(tr, val, cert, diag, fam, rep)
    print(f"continuation ({fam.name}, lambda={tr.lam:.6g}): limit {_vec(tr.limit)} value {val:.10g}"
          f" {'converged' if tr.converged else 'NOT converged'}")
    print(f"  certificate: {cert.summary if cert else 'limit infeasible'}")
    for name, c in diag.conditions.items():
        print(f"  {name}: {c.status} ({c.detail})")
    if not tr.converged:
        return EXIT_NUMERICAL
    if rc.assert_mode and (cert is None or not cert.passed):
        return EXIT_CERTIFICATE
    return EXIT_OK


def _continuation_report(tr, val, cert, diag, fam, rep):
    rep.summary["continuation"] = {
        "property": "continuation-limit",
        "family": fam.name,
        "penalty": _num(tr.lam),
        "limit": _vec(tr.limit),
        "value": _num(val),
        "converged": bool(tr.converged),
        "limit_feasible": bool(tr.limit_feasible),
        "certificate": _cert_dict(cert),
        "conditions": {k: {"status": c.status, "detail": c.detail} for k, c in diag.conditions.items()},
        "xi_star": {str(k): _num(v) for k, v in tr.xi_star.items()},
        "mu_star": {str(k): _num(v) for k, v in tr.mu_star.items()},
    }
    if diag.weak is not None:
        w = diag.weak
        rep.summary["continuation"]["weak_report"] = {
            "property": "weak-pseudo-stationarity",
            "in_unit_interval": bool(w.in_unit_interval),
            "weak_row_value": _num(w.weak_row_value),
            "weak_row_ok": bool(w.weak_row_ok),
            "certificate": _cert_dict(w.certificate),
            "C4'": w.c4_strengthened.status,
            "C5'": w.c5_strengthened.status,
        }
    keys = sorted(tr.c3_values)
    header = ["stage", "delta", "objective", "dd_value", "status", "iterations", "x"] + [f"theta_{a}{b}" for a, b in keys]
    rows = []
    for s in tr.stages:
        rows.append([s.index, s.delta, s.objective, s.dd_value, s.status, s.iterations,
                     " ".join(_fmt(v) for v in s.x)] + [tr.c3_values[k][s.index] for k in keys])
    rep.table("continuation-trace", header, rows)


def cmd_approx_suite(cfg, rc, rep) -> int:
    spec = rc.options.get("family") or (cfg.raw.get("family") if cfg else None) or "modified-hinge"
    fam = approx.family_from_spec(spec)
    report = approx.axiom_suite(fam, seed=rc.seed)
    rep.summary["axioms"] = {"property": "approximation-axioms", "family": fam.name, "tag": report.tag,
                             "passed": report.passed,
                             "results": {k: {"passed": r.passed, "detail": r.detail} for k, r in report.results.items()}}
    rep.table("axiom-suite", ["family", "axiom", "status", "detail"], report.rows())
    rep.table("approx-plot", ["delta", "t", "theta"], approx.plot_table(fam))
    for row in report.rows():
        print(f"{row[0]} {row[1]}: {row[2]} ({row[3]})")
    return EXIT_OK


def _run_grid(cfg, rc):
    spec = oracle.GridSpec(int(rc.options.get("grid", 41)), int(rc.options.get("refine", 2)))
    return oracle.grid_minimize(cfg.problem, spec, rc.threads, rc.seed), spec


def cmd_bruteforce(cfg, rc, rep) -> int:
    try:
        res, spec = _run_grid(cfg, rc)
    except ValueError as exc:
        raise ConfigError(str(exc), "bounds") from None
    rep.summary["grid"] = {"property": "grid-minimum", "value": _num(res.value), "value_tol": _num(res.value_tol),
                           "argmin": [_vec(a) for a in res.argmin[:50]], "best_point": _vec(res.best_point), "level_values": [_num(v) for v in res.level_values],
                           "refinement_consistent": res.refinement_consistent,
                           "feasible_points": int(np.sum(res.feasible)), "points": int(len(res.points))}
    rows = [list(p) + [v, int(f)] for p, v, f in zip(res.points, res.values, res.feasible)]
    rep.table("grid", [f"x{i + 1}" for i in range(cfg.problem.dimension)] + ["objective", "feasible"], rows)
    if bool(rc.options.get("equivalence", False)):
        eq = oracle.equivalence_report(cfg.problem, spec, rc.threads, rc.seed)
        rep.table("equivalence-gaps", ["variant", "value", "gap", "sign_condition", "condition_passed", "agrees"],
                  [(r.variant, r.value, r.gap, r.condition, r.condition_passed, r.agrees) for r in eq.rows])
    if res.any_feasible:
        print(f"grid minimum {res.value:.10g} (tol {res.value_tol:.3g}) at {len(res.argmin)} point(s),"
              f" best {_vec(res.best_point)}")
    else:
        print("no feasible grid point")
    return EXIT_OK


def cmd_compare(cfg, rc, rep) -> int:
    grid, _ = _run_grid(cfg, rc)
    lres = _run_lift(cfg, rc)
    tr, cval, fam, sched = _run_continuation(cfg, rc)
    ccert = _safe_certificate(cfg.problem, tr.limit, cfg.tolerances) if tr.limit_feasible else None
    rows = [
        ("grid", grid.value, " ".join(_fmt(v) for v in (grid.best_point if grid.best_point is not None else [])), "n/a"),
        ("lift", lres.objective if lres.x is not None else np.inf,
         " ".join(_fmt(v) for v in (lres.x if lres.x is not None else [])),
         lres.certificate.verdict if lres.certificate else "infeasible"),
        ("continuation", cval, " ".join(_fmt(v) for v in tr.limit), ccert.verdict if ccert else "infeasible"),
    ]
    rep.table("compare", ["method", "value", "x", "certificate"], rows)
    rep.summary["compare"] = {"property": "method-comparison", "grid_value": _num(grid.value),
                              "grid_value_tol": _num(grid.value_tol),
                              "lift_value": _num(rows[1][1]), "lift_certificate": rows[1][3],
                              "continuation_value": _num(cval), "continuation_certificate": rows[2][3],
                              "continuation_converged": bool(tr.converged)}
    for r in rows:
        print(f"{r[0]:>13}: value {float(r[1]):.10g} at [{r[2]}] certificate {r[3]}")
    certs = [lres.certificate, ccert]
    if rc.assert_mode and not all(c is not None and c.passed for c in certs):
        return EXIT_CERTIFICATE
    return EXIT_OK


COMMANDS = {
    "validate": cmd_validate, "check": cmd_check, "multipliers": cmd_multipliers, "lift": cmd_lift,
    "approx-solve": cmd_approx_solve, "approx-suite": cmd_approx_suite, "bruteforce": cmd_bruteforce,
    "compare": cmd_compare,
}


def run(rc: RunConfig) -> int:
    outdir = Path(rc.outdir or os.environ.get(OUTDIR_ENV) or "heaviside-out")
    rep = Reporter(outdir, rc.command)
    try:
        cfg = load_config(rc.problem_path) if rc.problem_path else None
        if cfg is None and rc.command != "approx-suite":
            raise ConfigError("a problem config is required for this command")
        if cfg is not None:
            rep.summary["problem_name"] = cfg.problem.name
        rep.summary["seed"] = rc.seed
        code = COMMANDS[rc.command](cfg, rc, rep)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    rep.summary["exit_code"] = code
    rep.write()
    return code


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="heaviside-opt", description="Heaviside-composite optimization toolkit")
    ap.add_argument("--outdir", help=f"report directory (default ${OUTDIR_ENV} or ./heaviside-out)")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--assert", dest="assert_mode", action="store_true",
                    help="exit 4 when a certificate does not pass")
    sub = ap.add_subparsers(dest="command", required=True)

    def with_problem(name, help_text, optional=False):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("problem", nargs="?" if optional else None, help="problem config (YAML)")
        return p

    with_problem("validate", "parse the config and report sign conditions")
    p = with_problem("check", "pseudo-B-stationarity certificate at a point")
    p.add_argument("--at", required=True, help="comma-separated point")
    p = with_problem("multipliers", "multiplier-family table at a point")
    p.add_argument("--at", required=True)
    p.add_argument("--mode", choices=sorted(MULTIPLIER_MODES), default="necessary")
    p = with_problem("lift", "epigraphical penalty solve by branch enumeration")
    p.add_argument("--lambda", dest="lambda_", default="auto")
    p.add_argument("--branch-budget", type=int, default=4096)
    for name in ("approx-solve", "compare"):
        p = with_problem(name, "continuation solve" if name == "approx-solve" else "grid vs lift vs continuation")
        p.add_argument("--family")
        p.add_argument("--delta0", type=float, default=0.5)
        p.add_argument("--rho", type=float, default=0.5)
        p.add_argument("--stages", type=int, default=24)
        p.add_argument("--lambda", dest="lambda_", default="auto")
        p.add_argument("--starts", type=int, default=1)
        if name == "compare":
            p.add_argument("--grid", type=int, default=41)
            p.add_argument("--refine", type=int, default=2)
            p.add_argument("--branch-budget", type=int, default=4096)
    p = with_problem("approx-suite", "axiom checks and plot table for an approximation family", optional=True)
    p.add_argument("--family")
    p = with_problem("bruteforce", "grid global minimization")
    p.add_argument("--grid", type=int, default=41)
    p.add_argument("--refine", type=int, default=2)
    p.add_argument("--equivalence", action="store_true", help="also tabulate reformulation gaps")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    opts = {k: v for k, v in vars(args).items()
            if k not in ("outdir", "seed", "threads", "assert_mode", "command", "problem")}
    if "lambda_" in opts:
        opts["lambda"] = opts.pop("lambda_")
    rc = RunConfig(getattr(args, "problem", None), args.command, opts, args.outdir, args.seed,
                   args.threads, args.assert_mode)
    return run(rc)


if __name__ == "__main__":
    sys.exit(main())
