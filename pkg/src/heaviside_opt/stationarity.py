"""Pulled-down problems, linearized cones and pseudo-B-stationarity certificates.

At an anchor point every Heaviside term is frozen according to the sign of its
inner function. The result is an ordinary nonsmooth program whose B-stationarity
at the anchor is the certificate. Terms with a zero inner value (the zero
classes) impose ``inner <= 0`` in that program.
"""

from __future__ import annotations

import itertools
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import linprog

from .directions import ConeRow, PieceBudgetExceeded, max_strict_slack, minimize_pl, sample_min
from .functions import FunctionHandle, PLDir, constant
from .model import ProblemSpec, _none_inf
from .sampling import tensor_grid, zero_crossings


@dataclass(frozen=True)
class Tolerances:
    eps_part: float = 1e-7
    eps_act: float = 1e-9
    tol_stat: float = 1e-8
    feas_tol: float = 1e-7
    tight_tol: float = 1e-7
    set_tol: float = 1e-9
    slater_tol: float = 1e-9
    piece_budget: int = 4096
    n_dir: int = 2000
    seed: int = 0


DEFAULT_TOL = Tolerances()

PSEUDO_B_STATIONARY = "PseudoBStationary"
FAILS = "Fails"
INCONCLUSIVE = "Inconclusive"


@dataclass(frozen=True)
class IndexPartition:
    k_pos: tuple
    k_zero: tuple
    k_neg: tuple
    l_pos: tuple
    l_zero: tuple
    l_neg: tuple
    tolerance: float
    g_values: tuple = ()
    h_values: tuple = ()
    sensitive: tuple = ()

    def same_nonzero_classes(self, other: "IndexPartition") -> bool:
        return (self.k_pos, self.k_neg, self.l_pos, self.l_neg) == (
            other.k_pos, other.k_neg, other.l_pos, other.l_neg)


def _classify(values, eps):
    pos = tuple(i for i, v in enumerate(values) if v > eps)
    zero = tuple(i for i, v in enumerate(values) if abs(v) <= eps)
    neg = tuple(i for i, v in enumerate(values) if v < -eps)
    return pos, zero, neg


def partition(problem: ProblemSpec, x, eps_part: float = DEFAULT_TOL.eps_part) -> IndexPartition:
    x = np.asarray(x, dtype=float)
    g = tuple(float(t.inner(x)) for t in problem.objective_terms)
    h = tuple(float(t.inner(x)) for t in problem.constraint_terms)
    kp, kz, kn = _classify(g, eps_part)
    lp, lz, ln = _classify(h, eps_part)
    sensitive = tuple(
        [("g", i) for i, v in enumerate(g) if 0 < abs(v) <= 2 * eps_part]
        + [("h", i) for i, v in enumerate(h) if 0 < abs(v) <= 2 * eps_part]
    )
    return IndexPartition(kp, kz, kn, lp, lz, ln, eps_part, g, h, sensitive)


@dataclass(frozen=True)
class SignedConstraint:
    """``func(x) <= 0``; ``func`` is the inner function or its negation."""

    func: FunctionHandle
    source: str  # "g" or "h"
    index: int
    cls: str  # "zero", "neg" or "pos"

    @property
    def sense(self) -> str:
        return ">= 0" if self.cls == "pos" else "<= 0"


@dataclass(frozen=True)
class PulledDownProblem:
    objective: FunctionHandle
    constraints: tuple
    functional_row: Optional[FunctionHandle]
    budget: float
    base_set: object
    anchor: np.ndarray
    partition: IndexPartition
    label: str = "pulled-down"

    def zero_rows(self):
        return [c for c in self.constraints if c.cls == "zero"]

    def functional_value(self, x) -> float:
        return 0.0 if self.functional_row is None else float(self.functional_row(x))

    def is_feasible(self, x, tol: Tolerances = DEFAULT_TOL) -> bool:
        if not self.base_set.contains(x, tol.feas_tol):
            return False
        if self.functional_row is not None and self.functional_value(x) > self.budget + tol.feas_tol:
            return False
        return all(float(c.func(x)) <= tol.feas_tol for c in self.constraints)


def _sum(handles: Sequence[FunctionHandle], n: int) -> FunctionHandle:
    out = None
    for f in handles:
        out = f if out is None else out + f
    return constant(0.0, n) if out is None else out


def build_pulled_down(problem: ProblemSpec, part: IndexPartition, anchor=None,
                      drop_g: Sequence[int] = (), drop_h: Sequence[int] = (),
                      extra_obj: Sequence[int] = (), extra_row: Sequence[int] = (),
                      obj_weights: Optional[dict] = None, row_weights: Optional[dict] = None,
                      label: str = "pulled-down") -> PulledDownProblem:
    """Freeze the terms at the partition.

    ``drop_g``/``drop_h`` remove zero-class constraints (multiplier value 1).
    ``extra_obj``/``extra_row`` add zero-class multipliers to the objective or the
    functional row, scaled by ``obj_weights``/``row_weights`` (default 1).
    """
    n = problem.dimension
    obj_terms = problem.objective_terms
    con_terms = problem.constraint_terms
    obj_weights = obj_weights or {}
    row_weights = row_weights or {}
    objective = _sum(
        [problem.base_cost]
        + [obj_terms[k].multiplier for k in part.k_pos]
        + [obj_terms[k].multiplier * obj_weights.get(k, 1.0) for k in extra_obj],
        n,
    )
    cons = []
    for k in range(len(obj_terms)):
        if k in part.k_pos:
            cons.append(SignedConstraint(-obj_terms[k].inner, "g", k, "pos"))
        elif k in part.k_zero:
            if k not in drop_g:
                cons.append(SignedConstraint(obj_terms[k].inner, "g", k, "zero"))
        else:
            cons.append(SignedConstraint(obj_terms[k].inner, "g", k, "neg"))
    for l in range(len(con_terms)):
        if l in part.l_pos:
            cons.append(SignedConstraint(-con_terms[l].inner, "h", l, "pos"))
        elif l in part.l_zero:
            if l not in drop_h:
                cons.append(SignedConstraint(con_terms[l].inner, "h", l, "zero"))
        else:
            cons.append(SignedConstraint(con_terms[l].inner, "h", l, "neg"))
    row = None
    if con_terms:
        row = _sum(
            [con_terms[l].multiplier for l in part.l_pos]
            + [con_terms[l].multiplier * row_weights.get(l, 1.0) for l in extra_row],
            n,
        )
    anchor = np.zeros(n) if anchor is None else np.asarray(anchor, dtype=float)
    return PulledDownProblem(objective, tuple(cons), row, problem.budget,
                             problem.feasible_set, anchor, part, label)


@dataclass
class ConeDescription:
    G: np.ndarray
    rows: list
    functional_tight: bool
    acq_evidence: str
    acq_witness: Optional[np.ndarray] = None
    structured: bool = True
    reason: str = ""


def linearized_cone(pulled: PulledDownProblem, x, tol: Tolerances = DEFAULT_TOL,
                    with_acq: bool = True) -> ConeDescription:
    x = np.asarray(x, dtype=float)
    G = pulled.base_set.tangent_rows(x, tol.set_tol)
    rows, funcs = [], []
    for c in pulled.constraints:
        if c.cls != "zero":
            continue
        funcs.append(c.func)
    tight = False
    if pulled.functional_row is not None:
        tight = abs(pulled.functional_value(x) - pulled.budget) <= tol.tight_tol
        if tight:
            funcs.append(pulled.functional_row - pulled.budget)
    if any(not f.is_structured for f in funcs):
        return ConeDescription(G, [], tight, "None", None, False, "active function without piece structure")
    for f in funcs:
        rows.append(ConeRow(f.dd_model(x, tol.eps_act)))
    if not with_acq:
        return ConeDescription(G, rows, tight, "None")
    if all(f.is_piecewise_affine for f in funcs):
        return ConeDescription(G, rows, tight, "PiecewisePolyhedral")
    try:
        s, v = max_strict_slack(rows, G, len(x), tol.piece_budget)
    except PieceBudgetExceeded:
        return ConeDescription(G, rows, tight, "None", reason="Slater LP over budget")
    if s > tol.slater_tol:
        return ConeDescription(G, rows, tight, "DirectionalSlater", v)
    return ConeDescription(G, rows, tight, "None")


@dataclass
class StationarityCertificate:
    point: np.ndarray
    verdict: str
    method: str
    acq_evidence: str
    dd_value: float = 0.0
    witness: Optional[np.ndarray] = None
    acq_witness: Optional[np.ndarray] = None
    reason: str = ""
    convex_like: bool = False
    partition: Optional[IndexPartition] = None
    lp_count: int = 0
    label: str = ""

    @property
    def passed(self) -> bool:
        return self.verdict == PSEUDO_B_STATIONARY

    @property
    def summary(self) -> str:
        s = self.verdict
        if self.verdict == PSEUDO_B_STATIONARY and self.convex_like:
            s += " (pseudo local minimizer: convex-like data with ACQ)"
        if self.verdict == FAILS:
            s += f" (dd {self.dd_value:.3e} along {np.round(self.witness, 6).tolist()})"
        if self.verdict == INCONCLUSIVE:
            s += f" ({self.reason})"
        return s


def _convex_like(pulled: PulledDownProblem, problem: Optional[ProblemSpec]) -> bool:
    handles = [pulled.objective] + [c.func for c in pulled.constraints]
    if pulled.functional_row is not None:
        handles.append(pulled.functional_row)
    ok = True
    for f in handles:
        if f.is_piecewise_affine:
            continue
        ok = ok and f.is_convex
    return ok


def certify_local(pulled: PulledDownProblem, x, tol: Tolerances = DEFAULT_TOL,
                  problem: Optional[ProblemSpec] = None) -> StationarityCertificate:
    """B-stationarity of ``pulled`` at ``x`` over its linearized cone.

    Nonnegativity over the linearized cone suffices because the tangent cone is
    contained in it. A descent direction counts as failure only with ACQ evidence.
    """
    x = np.asarray(x, dtype=float)
    part = pulled.partition
    if not pulled.objective.is_structured:
        return StationarityCertificate(x, INCONCLUSIVE, "None", "None",
                                       reason="objective without piece structure",
                                       partition=part, label=pulled.label)
    cone = linearized_cone(pulled, x, tol)
    if not cone.structured:
        return StationarityCertificate(x, INCONCLUSIVE, "None", "None", reason=cone.reason,
                                       partition=part, label=pulled.label)
    model = pulled.objective.dd_model(x, tol.eps_act)
    try:
        res = minimize_pl(model, cone.rows, cone.G, None, None, None, tol.piece_budget)
    except PieceBudgetExceeded:
        res = sample_min(model, cone.rows, cone.G, None, count=tol.n_dir, seed=tol.seed)
        if res.value >= -tol.tol_stat:
            return StationarityCertificate(
                x, INCONCLUSIVE, res.method, cone.acq_evidence, res.value, None, cone.acq_witness,
                "no descent found by sampling; positive claim not certified", partition=part,
                label=pulled.label)
    if res.v is None:
        return StationarityCertificate(x, INCONCLUSIVE, res.method, cone.acq_evidence,
                                       reason="direction LP failed", partition=part, label=pulled.label)
    if res.value >= -tol.tol_stat:
        cert = StationarityCertificate(x, PSEUDO_B_STATIONARY, res.method, cone.acq_evidence,
                                       res.value, None, cone.acq_witness, partition=part,
                                       lp_count=res.lp_count, label=pulled.label)
        cert.convex_like = cone.acq_evidence != "None" and _convex_like(pulled, problem)
        return cert
    if cone.acq_evidence == "None":
        return StationarityCertificate(
            x, INCONCLUSIVE, res.method, "None", res.value, res.v, None,
            "descent direction in the linearized cone but no ACQ evidence", partition=part,
            lp_count=res.lp_count, label=pulled.label)
    return StationarityCertificate(x, FAILS, res.method, cone.acq_evidence, res.value, res.v,
                                   cone.acq_witness, partition=part, lp_count=res.lp_count,
                                   label=pulled.label)


def check_point_feasible(problem: ProblemSpec, x, part: IndexPartition, tol: Tolerances = DEFAULT_TOL):
    if not problem.feasible_set.contains(x, tol.feas_tol):
        raise ValueError("point lies outside the polyhedral set")
    if problem.constraint_terms:
        row = sum(float(problem.constraint_terms[l].multiplier(x)) for l in part.l_pos)
        if row > problem.budget + tol.feas_tol:
            raise ValueError(f"point violates the functional constraint ({row:.6g} > {problem.budget:.6g})")


def check_pseudo_b_stationary(problem: ProblemSpec, x, tol: Tolerances = DEFAULT_TOL) -> StationarityCertificate:
    problem = problem.canonical()
    x = np.asarray(x, dtype=float)
    part = partition(problem, x, tol.eps_part)
    check_point_feasible(problem, x, part, tol)
    pulled = build_pulled_down(problem, part, x)
    return certify_local(pulled, x, tol, problem)


# -- l0 specialization ---------------------------------------------------------


def l0_restricted_zero_check(problem: ProblemSpec, x, tol: Tolerances = DEFAULT_TOL) -> dict:
    """Compares the pulled-down problem with ``min c + const s.t. x_i = 0 on the zero support``."""
    problem = problem.canonical()
    x = np.asarray(x, dtype=float)
    n = problem.dimension
    part = partition(problem, x, tol.eps_part)
    pulled = build_pulled_down(problem, part, x)
    support_zero = {i for i in range(n) if abs(x[i]) <= tol.eps_part}
    expected = {(i, +1) for i in support_zero} | {(i, -1) for i in support_zero}
    got = set()
    structural = True
    for c in pulled.zero_rows():
        if not c.func.is_piecewise_affine or len(c.func.convex_pieces) != 1 or c.func.concave_pieces:
            structural = False
            continue
        a, b = c.func.convex_pieces[0].affine
        nz = np.flatnonzero(a)
        if len(nz) != 1 or b != 0:
            structural = False
            continue
        got.add((int(nz[0]), int(np.sign(a[nz[0]]))))
    strict_ok = all(float(c.func(x)) < 0 for c in pulled.constraints if c.cls != "zero")
    const_part = pulled.objective - problem.base_cost
    probe = problem.feasible_set.center()
    obj_ok = abs(float(const_part(x)) - float(const_part(probe))) <= 1e-12
    return {
        "zero_support": sorted(support_zero),
        "constraint_rows": sorted(got),
        "expected_rows": sorted(expected),
        "equal": structural and got == expected and strict_ok and obj_ok,
        "strict_side_inactive": strict_ok,
        "objective_is_cost_plus_constant": obj_ok,
    }


# -- binary multiplier families -------------------------------------------------


@dataclass
class MultiplierRow:
    xi: tuple
    mu: tuple
    certificate: StationarityCertificate

    @property
    def passed(self) -> bool:
        return self.certificate.passed


@dataclass
class MultiplierReport:
    mode: str
    rows: list
    aggregate: bool
    precondition: Optional[bool]
    precondition_note: str
    k_zero: tuple
    l_zero: tuple


def _mode_b_precondition(problem, x, part, radius=1e-3, samples=400, seed=0) -> bool:
    rng = np.random.default_rng(seed)
    pts = x + radius * (2 * rng.random((samples, len(x))) - 1)
    pts = pts[problem.feasible_set.contains_batch(pts)]
    for k in part.k_zero:
        t = problem.objective_terms[k]
        if np.any(t.multiplier.evaluate(pts) * np.maximum(t.inner.evaluate(pts), 0) < -1e-12):
            return False
    for l in part.l_zero:
        t = problem.constraint_terms[l]
        if np.any(t.multiplier.evaluate(pts) * np.maximum(t.inner.evaluate(pts), 0) < -1e-12):
            return False
    return True


def enumerate_multiplier_family(problem: ProblemSpec, x, mode: str = "Necessary",
                                tol: Tolerances = DEFAULT_TOL, threads: int = 1,
                                budget_bits: int = 12) -> MultiplierReport:
    """Local checks for every binary multiplier pattern over the zero classes.

    Necessary aggregates with "exists"; SufficientB and SufficientC with "for all".
    """
    if mode not in ("Necessary", "SufficientB", "SufficientC"):
        raise ValueError(f"unknown multiplier mode {mode!r}")
    problem = problem.canonical()
    x = np.asarray(x, dtype=float)
    part = partition(problem, x, tol.eps_part)
    check_point_feasible(problem, x, part, tol)
    kz, lz = part.k_zero, part.l_zero
    bits = len(kz) + len(lz)
    if bits > budget_bits:
        raise ValueError(f"{bits} zero-class terms give 2^{bits} patterns, over the budget 2^{budget_bits}")

    patterns = list(itertools.product((0, 1), repeat=bits))

    def run(pattern):
        xi, mu = pattern[: len(kz)], pattern[len(kz):]
        drop_g = [k for k, s in zip(kz, xi) if s]
        drop_h = [l for l, s in zip(lz, mu) if s]
        extra_obj = drop_g if mode == "SufficientC" else []
        extra_row = drop_h if mode == "SufficientC" else []
        pulled = build_pulled_down(problem, part, x, drop_g, drop_h, extra_obj, extra_row,
                                   label=f"xi={xi} mu={mu}")
        return MultiplierRow(tuple(xi), tuple(mu), certify_local(pulled, x, tol, problem))

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            rows = list(ex.map(run, patterns))
    else:
        rows = [run(p) for p in patterns]
    if mode == "Necessary":
        aggregate = any(r.passed for r in rows)
        pre, note = None, "none required"
    elif mode == "SufficientB":
        aggregate = all(r.passed for r in rows)
        pre = _mode_b_precondition(problem, x, part, seed=tol.seed)
        note = "multiplier * positive part of inner >= 0 near the point (sampled)"
    else:
        aggregate = all(r.passed for r in rows)
        vals = [float(problem.objective_terms[k].multiplier(x)) for k in kz]
        vals += [float(problem.constraint_terms[l].multiplier(x)) for l in lz]
        pre = all(v >= 0 for v in vals)
        note = "zero-class multipliers nonnegative at the point"
    return MultiplierReport(mode, rows, aggregate, pre, note, kz, lz)


# -- sign conditions -------------------------------------------------------------


@dataclass
class SignRow:
    kind: str
    index: int
    label: str
    method: str
    min_value: float
    passed: bool
    heuristic: bool


@dataclass
class SignReport:
    mode: str
    rows: list

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.rows)

    @property
    def heuristic(self) -> bool:
        return any(r.heuristic for r in self.rows)


def _single_affine(f: FunctionHandle):
    if f.is_structured and len(f.convex_pieces) == 1 and not f.concave_pieces and f.convex_pieces[0].is_affine:
        return f.convex_pieces[0].affine
    return None


def _lp_sign(phi_aff, g_aff, X, mode):
    a, b0 = phi_aff
    ga, gb = g_aff
    A_ub, b_ub = X.A, X.d
    kw = {}
    if mode == "A":
        kw = dict(A_eq=ga[None, :], b_eq=[-gb])
    else:
        A_ub = np.vstack([A_ub, ga[None, :]])
        b_ub = np.append(b_ub, -gb)
    res = linprog(a, A_ub=A_ub if len(A_ub) else None, b_ub=b_ub if len(b_ub) else None,
                  bounds=list(zip(_none_inf(X.lower), _none_inf(X.upper))), method="highs", **kw)
    if res.status == 2:
        return np.inf
    if res.status == 3:
        return -np.inf
    return float(res.fun + b0)


def _sampled_points(problem, mode, term, resolution, x=None, radius=None, seed=0):
    X = problem.feasible_set
    if mode == "C1":
        rng = np.random.default_rng(seed)
        pts = x + radius * (2 * rng.random((2000, len(x))) - 1)
        pts = np.vstack([x[None, :], pts])
        return pts[X.contains_batch(pts)]
    if not X.is_bounded:
        raise ValueError("sampled sign check needs a bounded polyhedral set")
    grid, _ = tensor_grid(X.lower, X.upper, resolution)
    cross = zero_crossings([term.inner], X.lower, X.upper, resolution)
    pts = np.vstack([grid, cross]) if len(cross) else grid
    pts = pts[X.contains_batch(pts)]
    g = term.inner.evaluate(pts)
    if mode == "A":
        if len(cross):
            # closed side of each bracket: the point whose value is nearest zero
            gc = term.inner.evaluate(cross)
            keep = np.abs(gc) <= 1e-9 * (1 + np.abs(gc).max())
            exact = pts[g == 0]
            return np.vstack([exact, cross[keep]]) if keep.any() else exact
        return pts[g == 0]
    return pts[g <= 0]


def check_sign_conditions(problem: ProblemSpec, mode: str = "B", x=None, radius: float = 1e-2,
                          resolution: int = 81, tol: Tolerances = DEFAULT_TOL) -> SignReport:
    """Minimum of each multiplier over the relevant set; mode "A" zero set, "B" sublevel set,
    "C1" a neighborhood of ``x`` (zero-class terms at ``x`` only)."""
    problem = problem.canonical()
    if mode not in ("A", "B", "C1"):
        raise ValueError("mode must be A, B or C1")
    rows = []
    terms = list(problem.all_terms())
    if mode == "C1":
        x = np.asarray(x, dtype=float)
        part = partition(problem, x, tol.eps_part)
        terms = [(k, i, t) for k, i, t in terms
                 if (k == "obj" and i in part.k_zero) or (k == "con" and i in part.l_zero)]
    res = resolution if problem.dimension <= 2 else max(11, resolution // 4)
    for kind, idx, t in terms:
        phi = t.multiplier
        label = t.label or f"{kind}{idx}"
        if phi.is_constant:
            v = phi.constant_value()
            if v >= 0 or mode == "C1":
                rows.append(SignRow(kind, idx, label, "constant", v, v >= 0, False))
                continue
        pa, ga = _single_affine(phi), _single_affine(t.inner)
        if mode in ("A", "B") and pa is not None and ga is not None:
            v = _lp_sign(pa, ga, problem.feasible_set, mode)
            rows.append(SignRow(kind, idx, label, "LP", v, v >= -1e-12, False))
            continue
        pts = _sampled_points(problem, mode, t, res, x, radius, tol.seed)
        v = float(np.min(phi.evaluate(pts))) if len(pts) else np.inf
        rows.append(SignRow(kind, idx, label, "sampled", v, v >= -1e-12, True))
    return SignReport(mode, rows)


# -- descent condition for the functional constraint ----------------------------


@dataclass
class C4Row:
    point: np.ndarray
    infeasible: bool
    value: float
    euclidean_value: float
    witness: Optional[np.ndarray]
    passed: bool


@dataclass
class C4Report:
    rows: list
    strengthened: bool

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.rows if r.infeasible)

    @property
    def checked(self) -> int:
        return sum(1 for r in self.rows if r.infeasible)


def descent_of_functional(problem: ProblemSpec, x, tol: Tolerances = DEFAULT_TOL,
                          strengthened: bool = False, force: bool = False) -> C4Row:
    """Steepest decrease of the active functional sum over the linearized cone of the
    set without the functional row, rescaled to a Euclidean unit direction."""
    x = np.asarray(x, dtype=float)
    part = partition(problem, x, tol.eps_part)
    row_val = sum(float(problem.constraint_terms[l].multiplier(x)) for l in part.l_pos)
    infeasible = row_val > problem.budget + tol.feas_tol
    if not (infeasible or force):
        return C4Row(x, False, 0.0, 0.0, None, True)
    pulled = build_pulled_down(problem, part, x)
    pulled = replace(pulled, functional_row=None)
    cone = linearized_cone(pulled, x, tol, with_acq=False)
    n = problem.dimension
    model = PLDir.zero(n)
    for l in part.l_pos:
        model = model + problem.constraint_terms[l].multiplier.dd_model(x, tol.eps_act)
    if strengthened:
        for l in part.l_zero:
            model = model + problem.constraint_terms[l].multiplier.dd_model(x, tol.eps_act).max0()
    res = minimize_pl(model, cone.rows, cone.G, piece_budget=tol.piece_budget)
    v = res.v
    norm = float(np.linalg.norm(v)) if v is not None else 0.0
    euclid = res.value / norm if norm > 0 else 0.0
    return C4Row(x, infeasible, res.value, euclid, v, euclid <= -1.0 + 1e-9)


def check_c4_sufficient(problem: ProblemSpec, x_samples, tol: Tolerances = DEFAULT_TOL,
                        strengthened: bool = False) -> C4Report:
    problem = problem.canonical()
    rows = [descent_of_functional(problem, x, tol, strengthened) for x in np.atleast_2d(x_samples)]
    return C4Report(rows, strengthened)


# -- three-piece region problems ---------------------------------------------------


@dataclass
class RegionProblemRow:
    name: str
    applicable: bool
    feasible: bool
    certificate: Optional[StationarityCertificate]

    @property
    def stationary(self) -> bool:
        return self.feasible and self.certificate is not None and self.certificate.passed


@dataclass
class RegionProblemReport:
    point: np.ndarray
    f_value: float
    rows: list

    @property
    def stationary_names(self) -> list:
        return [r.name for r in self.rows if r.stationary]

    @property
    def applicable_name(self) -> str:
        return next(r.name for r in self.rows if r.applicable)

    @property
    def named(self) -> Optional[str]:
        """The applicable problem when it is also the only stationary one."""
        names = self.stationary_names
        return names[0] if names == [self.applicable_name] else None


def region_problem_report(psi1: FunctionHandle, psi2: FunctionHandle, psi3: FunctionHandle,
                          f: FunctionHandle, a: float, b: float, X, x,
                          tol: Tolerances = DEFAULT_TOL) -> RegionProblemReport:
    """Stationarity of ``x`` for each of the five local problems of the closed-right
    three-piece function: minimize psi1, psi2 or psi3 over X, and minimize psi1
    subject to f >= a or psi3 subject to f >= b."""
    x = np.asarray(x, dtype=float)
    fx = float(f(x))
    eps = tol.eps_part
    problems = [
        ("min psi1 (a < f < b)", psi1, None, a + eps < fx < b - eps),
        ("min psi2 (f < a)", psi2, None, fx < a - eps),
        ("min psi3 (f > b)", psi3, None, fx > b + eps),
        ("min psi1 s.t. f >= a (f = a)", psi1, a, abs(fx - a) <= eps),
        ("min psi3 s.t. f >= b (f = b)", psi3, b, abs(fx - b) <= eps),
    ]
    n = len(x)
    empty = IndexPartition((), (), (), (), (), (), eps)
    rows = []
    for name, obj, level, applicable in problems:
        cons = ()
        feasible = X.contains(x, tol.feas_tol)
        if level is not None:
            g = constant(level, n) - f
            gx = float(g(x))
            feasible = feasible and gx <= eps
            cons = (SignedConstraint(g, "g", 0, "zero" if abs(gx) <= eps else "neg"),)
        cert = None
        if feasible:
            pulled = PulledDownProblem(obj, cons, None, 0.0, X, x, empty, name)
            cert = certify_local(pulled, x, tol)
        rows.append(RegionProblemRow(name, applicable, feasible, cert))
    return RegionProblemReport(x, fx, rows)
