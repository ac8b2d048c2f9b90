"""Problem representation and source-problem builders.

A problem minimizes ``c(x) + sum_k phi_k(x) 1(g_k(x) > 0)`` over a polyhedron
subject to ``sum_l phi_l(x) 1(h_l(x) > 0) <= b``. Closed-flavor terms are
rewritten into open ones by :func:`rewrite_closed` when a problem is canonicalized.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import linprog

from .functions import FunctionHandle, constant, coordinate, maximum, minimum


class Flavor(enum.Enum):
    OPEN = "open"
    CLOSED = "closed"


def heaviside(values, flavor: Flavor = Flavor.OPEN) -> np.ndarray:
    values = np.asarray(values, dtype=float)
    if flavor is Flavor.OPEN:
        return (values > 0).astype(float)
    return (values >= 0).astype(float)


@dataclass(frozen=True)
class HeavisideTerm:
    multiplier: FunctionHandle
    inner: FunctionHandle
    flavor: Flavor = Flavor.OPEN
    label: str = ""

    def __post_init__(self):
        if self.multiplier.dimension != self.inner.dimension:
            raise ValueError("multiplier and inner function dimensions differ")

    @property
    def dimension(self) -> int:
        return self.inner.dimension

    def value(self, X):
        return self.multiplier.evaluate(X) * heaviside(self.inner.evaluate(X), self.flavor)


@dataclass(frozen=True)
class ClosedRewrite:
    """``psi 1[0,inf)(f) = constant_part + sign * open_term`` with ``sign = -1``."""

    constant_part: FunctionHandle
    open_term: HeavisideTerm
    sign: int = -1


def rewrite_closed(term: HeavisideTerm) -> ClosedRewrite:
    if term.flavor is not Flavor.CLOSED:
        raise ValueError("rewrite_closed expects a closed term")
    open_term = HeavisideTerm(term.multiplier, -term.inner, Flavor.OPEN, term.label)
    return ClosedRewrite(term.multiplier, open_term, -1)


class PolyhedralSet:
    """``{x : A x <= d, lower <= x <= upper}``; nonemptiness is checked on construction."""

    def __init__(self, dimension: int, A=None, d=None, lower=None, upper=None, tol: float = 1e-9):
        n = int(dimension)
        if n <= 0:
            raise ValueError("dimension must be positive")
        self.dimension = n
        self.A = np.zeros((0, n)) if A is None else np.atleast_2d(np.asarray(A, dtype=float)).reshape(-1, n)
        self.d = np.zeros(0) if d is None else np.asarray(d, dtype=float).ravel()
        if self.A.shape[0] != self.d.shape[0]:
            raise ValueError("inequality rows and right-hand sides differ in count")
        self.lower = np.full(n, -np.inf) if lower is None else np.asarray(lower, dtype=float).ravel()
        self.upper = np.full(n, np.inf) if upper is None else np.asarray(upper, dtype=float).ravel()
        if self.lower.shape != (n,) or self.upper.shape != (n,):
            raise ValueError("bounds must have one entry per coordinate")
        if np.any(self.lower > self.upper):
            raise ValueError("lower bound exceeds upper bound")
        self.tol = tol
        self._check_nonempty()

    @staticmethod
    def box(lower, upper) -> "PolyhedralSet":
        lower = np.asarray(lower, dtype=float).ravel()
        return PolyhedralSet(len(lower), lower=lower, upper=upper)

    def _check_nonempty(self):
        if self.A.shape[0] == 0:
            return
        res = linprog(
            np.zeros(self.dimension), A_ub=self.A, b_ub=self.d,
            bounds=list(zip(_none_inf(self.lower), _none_inf(self.upper))), method="highs",
        )
        if res.status == 2:
            raise ValueError("polyhedral set is empty")

    @property
    def is_bounded(self) -> bool:
        return bool(np.all(np.isfinite(self.lower)) and np.all(np.isfinite(self.upper)))

    def contains(self, x, tol: Optional[float] = None) -> bool:
        return bool(self.contains_batch(np.atleast_2d(x), tol)[0])

    def contains_batch(self, X, tol: Optional[float] = None) -> np.ndarray:
        tol = self.tol if tol is None else tol
        X = np.atleast_2d(np.asarray(X, dtype=float))
        ok = np.all(X >= self.lower - tol, axis=1) & np.all(X <= self.upper + tol, axis=1)
        if self.A.shape[0]:
            ok &= np.all(X @ self.A.T <= self.d + tol, axis=1)
        return ok

    def tangent_rows(self, x, tol: Optional[float] = None):
        """Rows ``G v <= 0`` describing the tangent cone of the set at ``x``."""
        tol = self.tol if tol is None else tol
        x = np.asarray(x, dtype=float)
        rows = []
        if self.A.shape[0]:
            act = self.A @ x >= self.d - tol
            rows.extend(self.A[act])
        eye = np.eye(self.dimension)
        for i in range(self.dimension):
            if x[i] <= self.lower[i] + tol:
                rows.append(-eye[i])
            if x[i] >= self.upper[i] - tol:
                rows.append(eye[i])
        if not rows:
            return np.zeros((0, self.dimension))
        return np.array(rows)

    def step_rows(self, x):
        """Rows ``G v <= h`` meaning ``x + v`` lies in the set (bounds excluded)."""
        x = np.asarray(x, dtype=float)
        if not self.A.shape[0]:
            return np.zeros((0, self.dimension)), np.zeros(0)
        return self.A.copy(), np.maximum(self.d - self.A @ x, 0.0)

    def with_extra_coordinate(self, lower: float, upper: float) -> "PolyhedralSet":
        A = np.hstack([self.A, np.zeros((self.A.shape[0], 1))])
        return PolyhedralSet(
            self.dimension + 1, A, self.d,
            np.append(self.lower, lower), np.append(self.upper, upper), self.tol,
        )

    def center(self) -> np.ndarray:
        """A point of the set (Chebyshev-like LP center when inequalities exist)."""
        lo = np.where(np.isfinite(self.lower), self.lower, -1.0)
        hi = np.where(np.isfinite(self.upper), self.upper, 1.0)
        mid = 0.5 * (lo + hi)
        if self.contains(mid):
            return mid
        n = self.dimension
        norms = np.linalg.norm(self.A, axis=1)
        c = np.zeros(n + 1)
        c[-1] = -1.0
        A_ub = np.hstack([self.A, norms[:, None]])
        res = linprog(
            c, A_ub=A_ub, b_ub=self.d,
            bounds=list(zip(_none_inf(self.lower), _none_inf(self.upper))) + [(0, 1.0)],
            method="highs",
        )
        return np.clip(res.x[:n], self.lower, self.upper)


def _none_inf(arr):
    return [None if not np.isfinite(a) else float(a) for a in arr]


@dataclass(frozen=True)
class ProblemSpec:
    base_cost: FunctionHandle
    objective_terms: tuple
    constraint_terms: tuple
    budget: float
    feasible_set: PolyhedralSet
    name: str = "problem"
    metadata: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "objective_terms", tuple(self.objective_terms))
        object.__setattr__(self, "constraint_terms", tuple(self.constraint_terms))
        object.__setattr__(self, "budget", float(self.budget))
        n = self.feasible_set.dimension
        if self.base_cost.dimension != n:
            raise ValueError("base cost dimension differs from the feasible set")
        for t in self.objective_terms + self.constraint_terms:
            if t.dimension != n:
                raise ValueError("term dimension differs from the feasible set")

    @property
    def dimension(self) -> int:
        return self.feasible_set.dimension

    @property
    def K(self) -> int:
        return len(self.objective_terms)

    @property
    def L(self) -> int:
        return len(self.constraint_terms)

    @property
    def is_canonical(self) -> bool:
        return all(t.flavor is Flavor.OPEN for t in self.objective_terms + self.constraint_terms)

    def canonical(self) -> "ProblemSpec":
        """Open-only copy; closed constraint terms leave an always-on term behind."""
        if self.is_canonical:
            return self
        n = self.dimension
        base = self.base_cost
        obj, cons = [], []
        for t in self.objective_terms:
            if t.flavor is Flavor.CLOSED:
                rw = rewrite_closed(t)
                base = base + rw.constant_part
                obj.append(HeavisideTerm(-rw.open_term.multiplier, rw.open_term.inner, Flavor.OPEN, t.label))
            else:
                obj.append(t)
        for t in self.constraint_terms:
            if t.flavor is Flavor.CLOSED:
                rw = rewrite_closed(t)
                cons.append(HeavisideTerm(rw.constant_part, constant(1.0, n), Flavor.OPEN, t.label + "+always"))
                cons.append(HeavisideTerm(-rw.open_term.multiplier, rw.open_term.inner, Flavor.OPEN, t.label))
            else:
                cons.append(t)
        return replace(self, base_cost=base, objective_terms=tuple(obj), constraint_terms=tuple(cons))

    # -- evaluation ---------------------------------------------------------
    def objective_value(self, X):
        val = self.base_cost.evaluate(X)
        for t in self.objective_terms:
            val = val + t.value(X)
        return val

    def constraint_value(self, X):
        X = np.asarray(X, dtype=float)
        val = np.zeros(X.shape[:-1])
        for t in self.constraint_terms:
            val = val + t.value(X)
        return val

    def is_feasible(self, x, tol: float = 1e-9) -> bool:
        if not self.feasible_set.contains(x, tol):
            return False
        return (not self.constraint_terms) or float(self.constraint_value(x)) <= self.budget + tol

    def penalized_value(self, X, lam: float):
        viol = np.maximum(self.constraint_value(X) - self.budget, 0.0) if self.constraint_terms else 0.0
        return self.objective_value(X) + lam * viol

    def all_terms(self):
        """Yields ``(kind, index, term)`` with kind ``"obj"`` or ``"con"``."""
        for k, t in enumerate(self.objective_terms):
            yield "obj", k, t
        for l, t in enumerate(self.constraint_terms):
            yield "con", l, t


# -- builders -------------------------------------------------------------------


class Target(enum.Enum):
    OBJECTIVE = "objective"
    CONSTRAINT = "constraint"


def build_l0(weights: Sequence[float], mode: Target = Target.OBJECTIVE) -> list:
    """Two open terms ``c_i 1(x_i > 0)`` and ``c_i 1(-x_i > 0)`` per positive weight.

    ``mode`` only labels the terms; the caller places them.
    """
    w = np.asarray(weights, dtype=float).ravel()
    if np.any(w < 0):
        raise ValueError("l0 weights must be nonnegative (positive cost of an activity)")
    n = len(w)
    terms = []
    for i, c in enumerate(w):
        if c == 0:
            continue
        xi = coordinate(i, n)
        terms.append(HeavisideTerm(constant(c, n), xi, Flavor.OPEN, f"{Target(mode).value}:l0+x{i + 1}"))
        terms.append(HeavisideTerm(constant(c, n), -xi, Flavor.OPEN, f"{Target(mode).value}:l0-x{i + 1}"))
    return terms


class Boundary(enum.Enum):
    CLOSED_MIDDLE = "closed-middle"
    CLOSED_RIGHT = "closed-right"


def build_piecewise_region(
    psi1: FunctionHandle,
    psi2: FunctionHandle,
    psi3: FunctionHandle,
    f: FunctionHandle,
    a: float,
    b: float,
    boundary: Boundary = Boundary.CLOSED_MIDDLE,
):
    """Three-piece function as base function plus open terms.

    CLOSED_MIDDLE: psi1 on a <= f <= b, psi2 on f < a, psi3 on f > b.
    CLOSED_RIGHT: psi1 on a <= f < b, psi2 on f < a, psi3 on f >= b.
    Returns ``(terms, base)``.
    """
    if not a < b:
        raise ValueError("piecewise region needs a < b")
    boundary = Boundary(boundary)
    lo_inf, hi_inf = np.isneginf(a), np.isposinf(b)
    terms = []
    if boundary is Boundary.CLOSED_MIDDLE:
        base = psi1
        if lo_inf and hi_inf:
            return terms, base
        if lo_inf:
            outside = f - b
        elif hi_inf:
            outside = a - f
        else:
            outside = maximum(f - b, a - f)
        terms.append(HeavisideTerm(-psi1, outside, Flavor.OPEN, "region:leave-middle"))
        if not lo_inf:
            terms.append(HeavisideTerm(psi2, a - f, Flavor.OPEN, "region:below"))
        if not hi_inf:
            terms.append(HeavisideTerm(psi3, f - b, Flavor.OPEN, "region:above"))
        return terms, base
    if hi_inf:
        base = psi1
    else:
        base = psi3
        terms.append(HeavisideTerm(psi1 - psi3, b - f, Flavor.OPEN, "region:below-upper"))
    if not lo_inf:
        terms.append(HeavisideTerm(psi2 - psi1, a - f, Flavor.OPEN, "region:below-lower"))
    return terms, base


def piecewise_region_value(psi1, psi2, psi3, f, a, b, boundary, X):
    """Direct case definition of the three-piece function (test oracle)."""
    fx = f.evaluate(X)
    boundary = Boundary(boundary)
    if boundary is Boundary.CLOSED_MIDDLE:
        return np.where(fx < a, psi2.evaluate(X), np.where(fx > b, psi3.evaluate(X), psi1.evaluate(X)))
    return np.where(fx < a, psi2.evaluate(X), np.where(fx >= b, psi3.evaluate(X), psi1.evaluate(X)))


def build_indicator_product(
    f: FunctionHandle,
    g: FunctionHandle,
    flavors=(Flavor.CLOSED, Flavor.CLOSED),
    multiplier: Optional[FunctionHandle] = None,
) -> list:
    """Terms whose sum equals ``multiplier * 1(f) * 1(g)`` with the given flavors."""
    ff, fg = Flavor(flavors[0]), Flavor(flavors[1])
    m = constant(1.0, f.dimension) if multiplier is None else multiplier
    if ff is fg:
        return [HeavisideTerm(m, minimum(f, g), ff, "product")]
    if ff is Flavor.OPEN:
        f, g = g, f
    # f closed, g open: 1(g>0) - 1(min(-f, g) > 0)
    return [
        HeavisideTerm(m, g, Flavor.OPEN, "product:open"),
        HeavisideTerm(-m, minimum(-f, g), Flavor.OPEN, "product:correction"),
    ]


def build_onoff(f: FunctionHandle, multiplier: Optional[FunctionHandle] = None) -> HeavisideTerm:
    """Closed term ``1[0,inf)(y f(x))`` on the extended vector ``(x, y)``.

    ``f`` must be smooth. Extend the polyhedral set with
    ``PolyhedralSet.with_extra_coordinate(0, 1)``.
    """
    if f.structure != "Smooth":
        raise TypeError("on-off builder needs a smooth f")
    n = f.dimension
    y = coordinate(n, n + 1)
    inner = y * f.embed(n + 1)
    m = constant(1.0, n + 1) if multiplier is None else multiplier
    return HeavisideTerm(m, inner, Flavor.CLOSED, "onoff")


def build_margin_classification(
    f: FunctionHandle, label: float, margin: float, multiplier: Optional[FunctionHandle] = None
) -> HeavisideTerm:
    """Misclassification indicator ``1(margin - label * f(x) > 0)``; no boundary special-casing."""
    if label not in (-1, 1, -1.0, 1.0):
        raise ValueError("label must be +1 or -1")
    m = constant(1.0, f.dimension) if multiplier is None else multiplier
    return HeavisideTerm(m, margin - f * float(label), Flavor.OPEN, "margin")
