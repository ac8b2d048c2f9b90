"""Epigraphical lifting: exact penalty, branch enumeration and auxiliary recovery.

Each term ``phi * 1(g > 0)`` has the epigraph ``{t >= phi, g >= 0} U {t >= 0, g <= 0}``.
Fixing one side per term ("Up" or "Down") turns the lifted problem into an NLP
in ``x`` alone, because the optimal ``t`` (resp. ``s``) sits at its lower bound.
"""

from __future__ import annotations

import itertools
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from .continuation import HandleObjective, InnerStop, inner_solve
from .functions import FunctionHandle, constant, estimate_lipschitz, positive_part
from .model import HeavisideTerm, PolyhedralSet, ProblemSpec
from .stationarity import DEFAULT_TOL, Tolerances, check_pseudo_b_stationary

UP, DOWN = "Up", "Down"
DEFAULT_SAFETY = 1.5


# -- penalty ------------------------------------------------------------------


@dataclass(frozen=True)
class PenaltyChoice:
    value: float
    safety: float
    lip_cost: float
    lip_multiplier: float
    estimates: tuple
    skipped: bool = False


def choose_penalty(problem: ProblemSpec, safety: float = DEFAULT_SAFETY, samples: int = 400,
                   seed: int = 0) -> PenaltyChoice:
    """``lam = safety * (Lip_c + K * max_k Lip_phi_k) + 1``; skipped when there is no functional row."""
    if safety < 1:
        raise ValueError("safety factor must be at least 1")
    problem = problem.canonical()
    X = problem.feasible_set
    est_c = estimate_lipschitz(problem.base_cost, X, samples, seed)
    ests = [("cost", est_c)]
    lip_phi = 0.0
    for k, t in enumerate(problem.objective_terms):
        e = estimate_lipschitz(t.multiplier, X, samples, seed + 1 + k)
        ests.append((f"multiplier {k}", e))
        lip_phi = max(lip_phi, e.value)
    lam = safety * (est_c.value + problem.K * lip_phi) + 1.0
    return PenaltyChoice(lam, safety, est_c.value, lip_phi, tuple(ests), skipped=problem.L == 0)


def penalty_from_constants(lip_cost: float, lip_multiplier: float, K: int, safety: float = 1.0) -> float:
    return safety * (lip_cost + K * lip_multiplier) + 1.0


# -- epigraph membership -----------------------------------------------------------


def epi_residual(t: float, x, term: HeavisideTerm) -> float:
    phi = float(term.multiplier(x))
    g = float(term.inner(x))
    return min(max(phi - t, -g), max(g, -t))


def epi_membership(t: float, x, term: HeavisideTerm, tol: float = 0.0) -> bool:
    """``min(max(phi - t, -g), max(g, -t)) <= tol``."""
    return epi_residual(t, x, term) <= tol


def term_value(x, term: HeavisideTerm) -> float:
    return float(term.multiplier(x)) if float(term.inner(x)) > 0 else 0.0


# -- lifted problem --------------------------------------------------------------


@dataclass
class LiftedProblem:
    base: ProblemSpec
    penalty: float
    aux_t: np.ndarray
    aux_s: np.ndarray
    epigraph_rows: tuple

    @staticmethod
    def build(problem: ProblemSpec, lam: float) -> "LiftedProblem":
        p = problem.canonical()
        rows = tuple(("t", k, t) for k, t in enumerate(p.objective_terms))
        rows += tuple(("s", l, t) for l, t in enumerate(p.constraint_terms))
        return LiftedProblem(p, float(lam), np.zeros(p.K), np.zeros(p.L), rows)

    def objective(self, x, t, s) -> float:
        p = self.base
        val = float(p.base_cost(x)) + float(np.sum(t))
        if p.L:
            val += self.penalty * max(float(np.sum(s)) - p.budget, 0.0)
        return val

    def is_feasible(self, x, t, s, tol: float = 1e-9) -> bool:
        if not self.base.feasible_set.contains(x, tol):
            return False
        return all(epi_membership(float(val), x, term, tol)
                   for val, (_, _, term) in zip(list(t) + list(s), self.epigraph_rows))


@dataclass
class BranchResult:
    index: int
    assignment: tuple
    status: str  # "infeasible", "converged", "max_iter", "stalled"
    x: Optional[np.ndarray] = None
    t: Optional[np.ndarray] = None
    s: Optional[np.ndarray] = None
    objective: float = np.inf
    dd_value: float = 0.0
    iterations: int = 0
    phase1_residual: float = 0.0

    @property
    def stationary(self) -> bool:
        return self.status == "converged"


@dataclass
class Recovery:
    t: np.ndarray
    s: np.ndarray
    case: str  # "i" (slack in s) or "ii" (all equalities)
    feasibility: str  # "slack", "tight", "infeasible"
    objective_before: float
    objective_after: float
    functional_value: float


@dataclass
class LiftResult:
    x: Optional[np.ndarray]
    t: Optional[np.ndarray]
    s: Optional[np.ndarray]
    branch: Optional[tuple]
    objective: float
    branches: list
    ties: list
    penalty: float
    recovery: Optional[Recovery] = None
    certificate: object = None
    notes: list = field(default_factory=list)

    @property
    def infeasible_recovery(self) -> bool:
        return self.recovery is not None and self.recovery.feasibility == "infeasible"


class BranchBudgetExceeded(RuntimeError):
    pass


def _sum(handles, n):
    out = constant(0.0, n)
    for f in handles:
        out = out + f
    return out


def branch_problem(problem: ProblemSpec, lam: float, assignment: Sequence[str]):
    """Objective handle and ``<= 0`` constraints for one Up/Down assignment."""
    p = problem
    n = p.dimension
    K = p.K
    obj_up = [t.multiplier for t, a in zip(p.objective_terms, assignment[:K]) if a == UP]
    objective = p.base_cost + _sum(obj_up, n)
    if p.L:
        con_up = [t.multiplier for t, a in zip(p.constraint_terms, assignment[K:]) if a == UP]
        objective = objective + positive_part(_sum(con_up, n) - p.budget) * lam
    cons = []
    for t, a in zip(list(p.objective_terms) + list(p.constraint_terms), assignment):
        cons.append(-t.inner if a == UP else t.inner)
    return objective, cons


def _phase1_starts(X: PolyhedralSet, count: int, seed: int):
    yield X.center()
    rng = np.random.default_rng(seed)
    lo, hi = X.lower, X.upper
    for _ in range(count):
        cand = lo + (hi - lo) * rng.random(len(lo))
        if X.contains(cand):
            yield cand


def find_feasible(X: PolyhedralSet, cons: Sequence[FunctionHandle], stop: InnerStop,
                  starts: int = 6, seed: int = 0, tol: float = 1e-9):
    """Minimizes the total violation ``sum max(F_i, 0)`` from several seeded starts."""
    if not cons:
        return X.center(), 0.0
    for F in cons:
        if F.is_constant and F.constant_value > tol:
            return None, F.constant_value
    violation = _sum([positive_part(F) for F in cons], X.dimension)
    best_x, best_r = None, np.inf
    for x0 in _phase1_starts(X, starts, seed):
        rep = inner_solve(HandleObjective(violation), X, x0, stop=stop)
        r = float(violation(rep.x))
        if r < best_r:
            best_x, best_r = rep.x, r
        if r <= tol:
            break
    return (best_x if best_r <= tol else None), best_r


def solve_branch(problem: ProblemSpec, lam: float, index: int, assignment: tuple,
                 stop: InnerStop = InnerStop(), seed: int = 0) -> BranchResult:
    X = problem.feasible_set
    objective, cons = branch_problem(problem, lam, assignment)
    x0, resid = find_feasible(X, cons, stop, seed=seed)
    if x0 is None:
        return BranchResult(index, assignment, "infeasible", phase1_residual=resid)
    rep = inner_solve(HandleObjective(objective), X, x0, cons, stop)
    x = rep.x
    K = problem.K
    t = np.array([float(tm.multiplier(x)) if a == UP else 0.0
                  for tm, a in zip(problem.objective_terms, assignment[:K])])
    s = np.array([float(tm.multiplier(x)) if a == UP else 0.0
                  for tm, a in zip(problem.constraint_terms, assignment[K:])])
    return BranchResult(index, assignment, rep.status, x, t, s, float(objective(x)), rep.dd_value,
                        rep.iterations, resid)


def recover_auxiliary(x, t, s, problem: ProblemSpec, lam: float, tol: float = 1e-9) -> Recovery:
    """Replaces ``t`` by the term values at ``x`` and classifies the ``s`` block."""
    p = problem.canonical()
    x = np.asarray(x, dtype=float)
    t = np.asarray(t, dtype=float)
    s = np.asarray(s, dtype=float)
    lifted = LiftedProblem.build(p, lam)
    if not lifted.is_feasible(x, t, s, tol):
        raise ValueError("input tuple is not in the lifted epigraph")
    t_new = np.array([term_value(x, term) for term in p.objective_terms])
    pi_s = np.array([term_value(x, term) for term in p.constraint_terms])
    total = float(np.sum(pi_s))
    if not p.L:
        case, feas = "ii", "slack"
    else:
        slack_in_s = bool(np.any(s > pi_s + tol))
        case = "i" if (slack_in_s and float(np.sum(s)) <= p.budget + tol) else "ii"
        if total < p.budget - tol:
            feas = "slack"
        elif total <= p.budget + tol:
            feas = "tight"
        else:
            feas = "infeasible"
    before = lifted.objective(x, t, s)
    after = lifted.objective(x, t_new, pi_s)
    return Recovery(t_new, pi_s, case, feas, before, after, total)


def solve_lifted(problem: ProblemSpec, lam: Optional[float] = None, branch_budget: int = 4096,
                 stop: InnerStop = InnerStop(), tol: Tolerances = DEFAULT_TOL, threads: int = 1,
                 seed: int = 0, tie_tol: float = 1e-9) -> LiftResult:
    """Enumerates every Up/Down assignment; returns the best branch-stationary tuple."""
    p = problem.canonical()
    notes = []
    if lam is None:
        choice = choose_penalty(p, seed=seed)
        lam = choice.value
        if choice.skipped:
            notes.append("no functional constraint: penalty unused")
    count = 2 ** (p.K + p.L)
    if count > branch_budget:
        raise BranchBudgetExceeded(f"{count} branches exceed the budget of {branch_budget}")
    assignments = list(itertools.product((UP, DOWN), repeat=p.K + p.L))

    def run(item):
        i, a = item
        return solve_branch(p, lam, i, a, stop, seed)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            branches = list(pool.map(run, enumerate(assignments)))
    else:
        branches = [run(item) for item in enumerate(assignments)]
    branches.sort(key=lambda b: b.index)

    candidates = [b for b in branches if b.stationary]
    if not candidates:
        candidates = [b for b in branches if b.status != "infeasible"]
        if candidates:
            notes.append("no branch reached its stationarity test; best non-converged branch used")
    if not candidates:
        return LiftResult(None, None, None, None, np.inf, branches, [], float(lam), notes=notes + ["all branches infeasible"])
    best = min(candidates, key=lambda b: (b.objective, b.index))
    ties = [b.assignment for b in candidates
            if abs(b.objective - best.objective) <= tie_tol * max(1.0, abs(best.objective))]
    rec = recover_auxiliary(best.x, best.t, best.s, p, lam)
    cert = None
    if rec.feasibility != "infeasible":
        cert = check_pseudo_b_stationary(p, best.x, tol)
    else:
        notes.append(f"recovered point violates the functional constraint "
                     f"({rec.functional_value:.6g} > {p.budget:.6g}); penalty too small")
    return LiftResult(best.x, rec.t, rec.s, best.assignment, best.objective, branches, ties,
                      float(lam), rec, cert, notes)


# -- tangent-cone probe ---------------------------------------------------------------

EQUALITY, SUBSET = "equal", "subset"


def _frac_vec(a):
    return tuple(Fraction(float(v)) for v in np.ravel(a))


class ExactPA:
    """Exact rational evaluation of a piecewise-affine handle ``max A x + b - max C x + d``."""

    def __init__(self, f: FunctionHandle):
        if not f.is_piecewise_affine:
            raise ValueError(f"{f.name or 'function'} is not piecewise affine")
        self.convex = [(_frac_vec(p.affine[0]), Fraction(float(p.affine[1]))) for p in f.convex_pieces]
        self.concave = [(_frac_vec(p.affine[0]), Fraction(float(p.affine[1]))) for p in f.concave_pieces]

    @staticmethod
    def _vals(pieces, x):
        return [sum((ai * xi for ai, xi in zip(a, x)), Fraction(0)) + b for a, b in pieces]

    def value(self, x) -> Fraction:
        out = max(self._vals(self.convex, x))
        if self.concave:
            out -= max(self._vals(self.concave, x))
        return out

    def dd(self, x, v) -> Fraction:
        def part(pieces):
            vals = self._vals(pieces, x)
            top = max(vals)
            return max(sum((ai * vi for ai, vi in zip(a, v)), Fraction(0))
                       for (a, _), val in zip(pieces, vals) if val == top)

        out = part(self.convex)
        if self.concave:
            out -= part(self.concave)
        return out


class ExactPolyhedron:
    def __init__(self, S: PolyhedralSet):
        self.A = [_frac_vec(row) for row in S.A]
        self.d = [Fraction(float(v)) for v in S.d]
        self.lower = [None if not np.isfinite(v) else Fraction(float(v)) for v in S.lower]
        self.upper = [None if not np.isfinite(v) else Fraction(float(v)) for v in S.upper]

    def contains(self, x) -> bool:
        for lo, hi, xi in zip(self.lower, self.upper, x):
            if (lo is not None and xi < lo) or (hi is not None and xi > hi):
                return False
        return all(sum((a * xi for a, xi in zip(row, x)), Fraction(0)) <= d for row, d in zip(self.A, self.d))

    def tangent(self, x, v) -> bool:
        for lo, hi, xi, vi in zip(self.lower, self.upper, x, v):
            if lo is not None and xi == lo and vi < 0:
                return False
            if hi is not None and xi == hi and vi > 0:
                return False
        for row, d in zip(self.A, self.d):
            if sum((a * xi for a, xi in zip(row, x)), Fraction(0)) == d and \
                    sum((a * vi for a, vi in zip(row, v)), Fraction(0)) > 0:
                return False
        return True


def _classify_case(fx, psix, t, pix):
    if t == pix:
        if fx > 0:
            return "b:f>0", EQUALITY
        if fx < 0:
            return "b:f<0", EQUALITY
        if psix > 0:
            return "b:f=0<psi", EQUALITY
        return "b:f=0=psi", EQUALITY
    if fx != 0 or psix == 0:
        return "c:free", EQUALITY
    if t > psix:
        return "c:f=0<psi<t", EQUALITY
    if t < psix:
        return "c:f=0,t<psi", SUBSET
    return "c:f=0<psi=t", SUBSET


def _formula(case, dt, dpsi, df, tangent_ok):
    if not tangent_ok:
        return False
    if case == "b:f>0":
        return dt >= dpsi
    if case == "b:f<0":
        return dt >= 0
    if case == "b:f=0<psi":
        return dt >= 0 and df <= 0
    if case == "b:f=0=psi":
        return dt >= (dpsi if df > 0 else 0)
    if case in ("c:free", "c:f=0<psi<t"):
        return True
    if case == "c:f=0,t<psi":
        return df <= 0
    return (dt >= dpsi and df >= 0) or df <= 0


@dataclass
class ProbeReport:
    case: str
    relation: str
    samples: int
    both: int
    formula_only: int
    exact_only: int
    unresolved: int

    @property
    def agreement(self) -> float:
        return (self.both + (self.samples - self.both - self.formula_only - self.exact_only - self.unresolved)) / self.samples

    @property
    def passed(self) -> bool:
        if self.unresolved:
            return False
        if self.relation == EQUALITY:
            return self.formula_only == 0 and self.exact_only == 0
        return self.exact_only == 0


def tangent_formula_probe(term: HeavisideTerm, S: PolyhedralSet, t: float, x, directions: int = 600,
                          seed: int = 0, taus=(Fraction(1, 10 ** 4), Fraction(1, 10 ** 7))) -> ProbeReport:
    """Compares the case formula for the epigraph tangent cone with a direct small-step test.

    The direct test asks whether ``(t, x) + tau (dt, v)`` lies in the epigraph of
    ``psi * 1(f > 0)`` over ``S`` for each ``tau`` in ``taus``, in exact rational
    arithmetic. Piecewise-affine data make this exact once ``tau`` is below the
    first breakpoint along the ray; disagreement between the two steps is counted
    as unresolved.
    """
    psi, f = ExactPA(term.multiplier), ExactPA(term.inner)
    poly = ExactPolyhedron(S)
    xb = _frac_vec(x)
    tb = Fraction(float(t))
    fx, psix = f.value(xb), psi.value(xb)
    pix = psix if fx > 0 else Fraction(0)
    if tb < pix or not poly.contains(xb):
        raise ValueError("(t, x) is not in the epigraph")
    case, relation = _classify_case(fx, psix, tb, pix)

    def exact_member(dt, v):
        results = set()
        for tau in taus:
            xn = tuple(a + tau * b for a, b in zip(xb, v))
            if not poly.contains(xn):
                results.add(False)
                continue
            val = psi.value(xn) if f.value(xn) > 0 else Fraction(0)
            results.add(tb + tau * dt >= val)
        return results.pop() if len(results) == 1 else None

    rng = np.random.default_rng(seed)
    n = len(xb)
    both = f_only = e_only = unresolved = 0
    for i in range(directions):
        v = tuple(Fraction(int(k), 64) for k in rng.integers(-64, 65, size=n))
        dpsi, df = psi.dd(xb, v), f.dd(xb, v)
        mode = i % 4
        if mode == 0:
            dt = dpsi
        elif mode == 1:
            dt = Fraction(0)
        else:
            dt = Fraction(int(rng.integers(-128, 129)), 64)
        exact = exact_member(dt, v)
        predicted = _formula(case, dt, dpsi, df, poly.tangent(xb, v))
        if exact is None:
            unresolved += 1
        elif exact and predicted:
            both += 1
        elif predicted and not exact:
            f_only += 1
        elif exact and not predicted:
            e_only += 1
    return ProbeReport(case, relation, directions, both, f_only, e_only, unresolved)
