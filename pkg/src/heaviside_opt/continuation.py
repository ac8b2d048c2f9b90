"""Continuation over approximation families with an LP-direction descent solver."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .approx import ApproxFamily, make_modified_hinge
from .directions import ConeRow, PieceBudgetExceeded, minimize_pl, sample_min
from .functions import FunctionHandle, PLDir
from .model import PolyhedralSet, ProblemSpec
from .stationarity import (
    DEFAULT_TOL, Tolerances, build_pulled_down, certify_local, check_c4_sufficient,
    check_sign_conditions, descent_of_functional, partition,
)


# -- objectives -------------------------------------------------------------------


class HandleObjective:
    """Adapter so a plain function handle can be minimized by :func:`inner_solve`."""

    def __init__(self, f: FunctionHandle):
        self.f = f

    def value(self, x) -> float:
        return float(self.f(x))

    def dd_model(self, x, eps: float, snap: float = 0.0) -> PLDir:
        return self.f.dd_model(x, eps)


class ApproximatedObjective:
    """c + sum_k phi_k theta_k(g_k, delta) + lam * max(sum_l phi_l theta_l(h_l, delta) - b, 0)."""

    def __init__(self, problem: ProblemSpec, families, lam: float, delta: float):
        self.problem = problem.canonical()
        self.obj_fams, self.con_fams = resolve_families(self.problem, families)
        self.lam = float(lam)
        self.delta = float(delta)

    def _aggregate(self, X):
        d = self.delta
        p = self.problem
        val = p.base_cost.evaluate(X)
        for t, fam in zip(p.objective_terms, self.obj_fams):
            val = val + t.multiplier.evaluate(X) * fam.theta(t.inner.evaluate(X), d)
        agg = None
        if p.constraint_terms:
            agg = -p.budget
            for t, fam in zip(p.constraint_terms, self.con_fams):
                agg = agg + t.multiplier.evaluate(X) * fam.theta(t.inner.evaluate(X), d)
        return val, agg

    def value(self, x) -> float:
        val, agg = self._aggregate(np.asarray(x, dtype=float))
        if agg is not None:
            val = val + self.lam * np.maximum(agg, 0.0)
        return float(val)

    def values(self, X) -> np.ndarray:
        val, agg = self._aggregate(np.asarray(X, dtype=float))
        if agg is not None:
            val = val + self.lam * np.maximum(agg, 0.0)
        return val

    def constraint_aggregate(self, x) -> float:
        return float(self._aggregate(np.asarray(x, dtype=float))[1] or 0.0) + self.problem.budget

    def _term_model(self, t, fam, x, eps, snap):
        d = self.delta
        gx = float(t.inner(x))
        phix = float(t.multiplier(x))
        th = fam.theta(gx, d)
        model = t.multiplier.dd_model(x, eps).scale(th)
        r_plus, r_minus = fam.slopes(gx, d, snap)
        if phix != 0.0 and (r_plus != 0.0 or r_minus != 0.0):
            inner = t.inner.dd_model(x, eps).monotone_compose(r_plus, r_minus)
            model = model + inner.scale(phix)
        return model

    def dd_model(self, x, eps: float = 1e-9, snap: float = 0.0, tie_tol: float = 1e-12) -> PLDir:
        """Exact directional derivative (``snap = 0``) or a kink-aware variant for descent."""
        x = np.asarray(x, dtype=float)
        p = self.problem
        model = p.base_cost.dd_model(x, eps)
        for t, fam in zip(p.objective_terms, self.obj_fams):
            model = model + self._term_model(t, fam, x, eps, snap)
        if p.constraint_terms and self.lam > 0:
            agg = self.constraint_aggregate(x) - p.budget
            if agg >= -max(tie_tol, snap):
                row = PLDir.zero(p.dimension)
                for t, fam in zip(p.constraint_terms, self.con_fams):
                    row = row + self._term_model(t, fam, x, eps, snap)
                row = row if agg > max(tie_tol, snap) else row.max0()
                model = model + row.scale(self.lam)
        return model

    def dd(self, x, v, eps: float = 1e-9) -> float:
        return self.dd_model(x, eps).evaluate(v)


def resolve_families(problem: ProblemSpec, families):
    if families is None:
        families = make_modified_hinge()
    if isinstance(families, ApproxFamily):
        return [families] * problem.K, [families] * problem.L
    obj = list(families.get("obj", []))
    con = list(families.get("con", []))
    if len(obj) != problem.K or len(con) != problem.L:
        raise ValueError("one family per term is required")
    return obj, con


def eval_approx(obj: ApproximatedObjective, x):
    """Value and exact directional-derivative callable at ``x``."""
    x = np.asarray(x, dtype=float)
    model = obj.dd_model(x)
    return obj.value(x), model.evaluate


# -- inner solver ---------------------------------------------------------------


@dataclass(frozen=True)
class InnerStop:
    max_iter: int = 500
    dd_tol: float = 1e-8
    c1: float = 1e-4
    backtrack: float = 0.5
    alpha0: float = 1.0
    alpha_min: float = 1e-14
    eps_model: float = 1e-9
    snap: float = 1e-10
    feas_tol: float = 1e-10
    piece_budget: int = 4096


@dataclass
class InnerReport:
    x: np.ndarray
    value: float
    dd_value: float
    iterations: int
    status: str  # "converged", "max_iter", "stalled"
    log: list = field(default_factory=list)

    @property
    def converged(self) -> bool:
        return self.status == "converged"


def _direction(obj, X: PolyhedralSet, x, constraints, stop: InnerStop, exact: bool):
    eps = 1e-12 if exact else stop.eps_model
    snap = 0.0 if exact else stop.snap
    model = obj.dd_model(x, eps, snap)
    rows = []
    for F in constraints:
        Fx = float(F(x))
        weight = 0.0 if F.is_piecewise_affine else 1.0
        rows.append(ConeRow(F.dd_model(x, eps), offset=min(Fx, 0.0), weight=weight))
    G, h = X.step_rows(x)
    lb = np.maximum(-1.0, X.lower - x)
    ub = np.minimum(1.0, X.upper - x)
    lb, ub = np.minimum(lb, 0.0), np.maximum(ub, 0.0)
    try:
        res = minimize_pl(model, rows, G, h, lb, ub, stop.piece_budget)
    except PieceBudgetExceeded:
        res = sample_min(model, rows, G, h, lb, ub)
    if res.v is None:
        return 0.0, np.zeros_like(x)
    return res.value, res.v


def _slope(obj, x, step) -> float:
    norm = float(np.max(np.abs(step)))
    if norm == 0.0:
        return 0.0
    return float(obj.dd_model(x, 1e-12).evaluate(step / norm))


def inner_solve(obj, X: PolyhedralSet, x0, constraints: Sequence[FunctionHandle] = (),
                stop: InnerStop = InnerStop()) -> InnerReport:
    """Descent along LP directions with Armijo backtracking.

    ``obj`` provides ``value(x)`` and ``dd_model(x, eps, snap)``; ``constraints`` are
    handles required to stay ``<= 0``. Stops when the LP value is ``>= -dd_tol``.
    """
    x = np.clip(np.asarray(x0, dtype=float), X.lower, X.upper)
    if not X.contains(x, 1e-9):
        raise ValueError("starting point outside the polyhedral set")
    val = obj.value(x)
    slack = max([stop.feas_tol] + [float(F(x)) for F in constraints])
    log = []
    status, m = "max_iter", 0.0
    it = 0
    for it in range(stop.max_iter):
        accepted = False
        for exact in (False, True):
            m, v = _direction(obj, X, x, constraints, stop, exact)
            if m >= -stop.dd_tol:
                break
            alpha = stop.alpha0
            while alpha >= stop.alpha_min:
                x_new = np.clip(x + alpha * v, X.lower, X.upper)
                feas = X.contains(x_new, 1e-9) and all(
                    float(F(x_new)) <= slack for F in constraints)
                if feas:
                    val_new = obj.value(x_new)
                    noise = 8 * np.finfo(float).eps * max(1.0, abs(val))
                    if stop.c1 * alpha * -m > noise:
                        ok = val_new <= val + stop.c1 * alpha * m
                    else:
                        # decrease below float resolution: accept only steps that do not
                        # overshoot, judged by the one-sided slope at the trial point
                        ok = val_new <= val + noise and _slope(obj, x_new, x_new - x) <= 0.0
                    if ok:
                        accepted = True
                        break
                alpha *= stop.backtrack
            if accepted:
                break
        if m >= -stop.dd_tol:
            status = "converged"
            break
        if not accepted:
            status = "stalled"
            break
        log.append((it, val, m, alpha))
        x, val = x_new, val_new
    else:
        m, _ = _direction(obj, X, x, constraints, stop, True)
        if m >= -stop.dd_tol:
            status = "converged"
    iterations = len(log)
    return InnerReport(x, val, m, iterations, status, log)


# -- continuation driver ----------------------------------------------------------


@dataclass(frozen=True)
class Schedule:
    delta0: float = 0.5
    rho: float = 0.5
    stages: int = 24
    x_tol: float = 1e-7
    c3_tol: float = 1e-3

    def deltas(self):
        return [self.delta0 * self.rho ** k for k in range(self.stages)]


@dataclass
class Stage:
    index: int
    delta: float
    x: np.ndarray
    iterations: int
    objective: float
    dd_value: float
    status: str
    exact_penalized: float
    functional_value: float
    feasible: bool


@dataclass
class ContinuationTrace:
    stages: list
    limit: np.ndarray
    converged: bool
    lam: float
    c3_values: dict
    xi_star: dict
    mu_star: dict
    limit_partition: object
    limit_feasible: bool
    families: tuple
    limit_value: float = float("nan")

    @property
    def infeasible_stages(self):
        return [s for s in self.stages if not s.feasible]

    @property
    def stage_failures(self):
        return [s for s in self.stages if s.status != "converged"]


def run_continuation(problem: ProblemSpec, families=None, lam: Optional[float] = None,
                     schedule: Schedule = Schedule(), x0=None, stop: InnerStop = InnerStop(),
                     tol: Tolerances = DEFAULT_TOL) -> ContinuationTrace:
    problem = problem.canonical()
    fams = families if families is not None else make_modified_hinge()
    if lam is None:
        from .lift import choose_penalty

        lam = choose_penalty(problem).value
    X = problem.feasible_set
    x = X.center() if x0 is None else np.asarray(x0, dtype=float)
    stages = []
    for i, d in enumerate(schedule.deltas()):
        obj = ApproximatedObjective(problem, fams, lam, d)
        rep = inner_solve(obj, X, x, stop=stop)
        x = rep.x
        cval = float(problem.constraint_value(x)) if problem.L else 0.0
        feasible = (not problem.L) or cval <= problem.budget + tol.feas_tol
        stages.append(Stage(i, d, x.copy(), rep.iterations, rep.value, rep.dd_value, rep.status,
                            float(problem.penalized_value(x, lam)), cval, feasible))
    limit = stages[-1].x
    tail = [s.x for s in stages[-4:]]
    converged = all(np.max(np.abs(a - b)) <= schedule.x_tol for a, b in zip(tail[1:], tail[:-1]))
    part = partition(problem, limit, tol.eps_part)
    obj_fams, con_fams = resolve_families(problem, fams)
    c3, xi, mu = {}, {}, {}
    for k in part.k_zero:
        t = problem.objective_terms[k]
        seq = [float(obj_fams[k].theta(float(t.inner(s.x)), s.delta)) for s in stages]
        c3[("g", k)] = seq
        xi[k] = float(np.mean(seq[-3:]))
    for l in part.l_zero:
        t = problem.constraint_terms[l]
        seq = [float(con_fams[l].theta(float(t.inner(s.x)), s.delta)) for s in stages]
        c3[("h", l)] = seq
        mu[l] = float(np.mean(seq[-3:]))
    if problem.L:
        row = sum(float(problem.constraint_terms[l].multiplier(limit)) for l in part.l_pos)
        limit_feasible = row <= problem.budget + tol.feas_tol and X.contains(limit, tol.feas_tol)
    else:
        limit_feasible = X.contains(limit, tol.feas_tol)
    # objective with zero-class terms off, matching how the certificate classifies the limit
    limit_value = float(problem.base_cost(limit)) + sum(
        float(problem.objective_terms[k].multiplier(limit)) for k in part.k_pos)
    return ContinuationTrace(stages, limit, converged, float(lam), c3, xi, mu, part,
                             limit_feasible, (tuple(obj_fams), tuple(con_fams)), limit_value)


# -- condition diagnostics ----------------------------------------------------------


@dataclass
class ConditionStatus:
    name: str
    status: str  # "Pass", "Fail", "Unverified"
    detail: str = ""


@dataclass
class WeakReport:
    xi_star: dict
    mu_star: dict
    in_unit_interval: bool
    weak_row_value: float
    weak_row_ok: bool
    certificate: object
    c4_strengthened: ConditionStatus
    c5_strengthened: ConditionStatus


@dataclass
class ConditionReport:
    conditions: dict
    weak: Optional[WeakReport] = None
    certificate: object = None

    def status(self, name: str) -> str:
        return self.conditions[name].status


def _clarke_ok(f: FunctionHandle) -> bool:
    return f.is_structured and (f.structure == "Smooth" or f.is_convex)


def _c2_sampled(problem, x, part, radius=1e-3, samples=300, seed=0) -> tuple:
    funcs = [problem.objective_terms[k].inner for k in part.k_zero]
    funcs += [problem.constraint_terms[l].inner for l in part.l_zero]
    if not funcs:
        return "Pass", "no zero classes"
    if all(f.is_convex_piecewise_affine for f in funcs):
        return "Pass", "convex piecewise affine inner functions"
    rng = np.random.default_rng(seed)
    X = problem.feasible_set
    G = X.tangent_rows(x)
    models = [f.dd_model(x) for f in funcs]
    pts = x + radius * (2 * rng.random((samples, len(x))) - 1)
    pts = pts[X.contains_batch(pts)]
    checked = 0
    for _ in range(samples):
        v = 2 * rng.random(len(x)) - 1
        if len(G) and np.any(G @ v > 0):
            continue
        if any(m.evaluate(v) > 0 for m in models):
            continue
        checked += 1
        for p in pts[:50]:
            if any(f.dd_model(p).evaluate(v) > 1e-9 for f in funcs):
                return "Fail", f"implication violated at {np.round(p, 6).tolist()}"
    return "Pass", f"sampled implication held on {checked} directions"


def _c3_status(trace: ContinuationTrace, c3_tol: float) -> ConditionStatus:
    if not trace.c3_values:
        return ConditionStatus("C3", "Pass", "no zero classes at the limit")
    bad = []
    for key, seq in trace.c3_values.items():
        tail = np.asarray(seq[-4:])
        trend = bool(np.all(np.diff(tail) <= 1e-12))
        if not (seq[-1] <= c3_tol and trend):
            bad.append(f"{key[0]}{key[1]} -> {seq[-1]:.4g}")
    if bad:
        return ConditionStatus("C3", "Fail", "; ".join(bad))
    return ConditionStatus("C3", "Pass", "theta values vanish along the iterates")


def weak_problem_certificate(problem: ProblemSpec, x, xi: dict, mu: dict, tol: Tolerances = DEFAULT_TOL):
    part = partition(problem, x, tol.eps_part)
    pulled = build_pulled_down(problem, part, x, extra_obj=list(xi), extra_row=list(mu),
                               obj_weights=xi, row_weights=mu, label="weak")
    return pulled, certify_local(pulled, x, tol, problem)


def diagnose_conditions(trace: ContinuationTrace, problem: ProblemSpec, tol: Tolerances = DEFAULT_TOL,
                        schedule: Schedule = Schedule(), radius_c1: float = 1e-2) -> ConditionReport:
    """Pass / Fail / Unverified for each convergence condition; never assumed."""
    problem = problem.canonical()
    x = trace.limit
    part = trace.limit_partition
    conds = {}

    sign = check_sign_conditions(problem, "C1", x=x, radius=radius_c1, tol=tol)
    if not sign.rows:
        conds["C1"] = ConditionStatus("C1", "Pass", "no zero classes at the limit")
    else:
        how = "sampled" if sign.heuristic else "exact"
        conds["C1"] = ConditionStatus("C1", "Pass" if sign.passed else "Fail",
                                      f"min multiplier near limit {min(r.min_value for r in sign.rows):.4g} ({how})")

    st, detail = _c2_sampled(problem, x, part, seed=tol.seed)
    conds["C2"] = ConditionStatus("C2", st, detail)
    conds["C3"] = _c3_status(trace, schedule.c3_tol)

    infeasible = [s.x for s in trace.stages if not s.feasible]
    if not problem.L:
        conds["C4"] = ConditionStatus("C4", "Pass", "no functional constraint")
    elif not infeasible:
        conds["C4"] = ConditionStatus("C4", "Unverified", "no infeasible iterates to test")
    else:
        rep = check_c4_sufficient(problem, np.array(infeasible), tol)
        conds["C4"] = ConditionStatus("C4", "Pass" if rep.passed else "Fail",
                                      f"{rep.checked} infeasible iterates tested")

    handles = [problem.base_cost] + [problem.objective_terms[k].multiplier for k in part.k_pos]
    handles += [problem.constraint_terms[l].multiplier for l in part.l_pos]
    conds["C5"] = ConditionStatus("C5", "Pass" if all(_clarke_ok(f) for f in handles) else "Unverified",
                                  "smooth or convex max-of-smooth handles")

    report = ConditionReport(conds)
    if conds["C3"].status == "Fail":
        report.weak = weak_report(trace, problem, tol)
    return report


def weak_report(trace: ContinuationTrace, problem: ProblemSpec, tol: Tolerances = DEFAULT_TOL) -> WeakReport:
    problem = problem.canonical()
    x = trace.limit
    part = trace.limit_partition
    xi, mu = dict(trace.xi_star), dict(trace.mu_star)
    inside = all(0.0 <= v <= 1.0 for v in list(xi.values()) + list(mu.values()))
    row = sum(float(problem.constraint_terms[l].multiplier(x)) for l in part.l_pos)
    row += sum(mu[l] * float(problem.constraint_terms[l].multiplier(x)) for l in mu)
    row_ok = (not problem.L) or row <= problem.budget + 1e-6
    _, cert = weak_problem_certificate(problem, x, xi, mu, tol)
    if problem.L:
        c4 = descent_of_functional(problem, x, tol, strengthened=True, force=True)
        c4s = ConditionStatus("C4'", "Pass" if c4.passed else "Fail",
                              f"unit-direction value {c4.euclidean_value:.4g}")
    else:
        c4s = ConditionStatus("C4'", "Pass", "no functional constraint")
    handles = [problem.base_cost] + [t.multiplier for t in problem.objective_terms]
    handles += [t.multiplier for t in problem.constraint_terms]
    c5s = ConditionStatus("C5'", "Pass" if all(_clarke_ok(f) for f in handles) else "Unverified",
                          "smooth or convex max-of-smooth handles")
    return WeakReport(xi, mu, inside, row, row_ok, cert, c4s, c5s)


def certify_limit(trace: ContinuationTrace, problem: ProblemSpec, tol: Tolerances = DEFAULT_TOL):
    from .stationarity import check_pseudo_b_stationary

    return check_pseudo_b_stationary(problem, trace.limit, tol)
