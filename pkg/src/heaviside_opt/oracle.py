"""Brute-force ground truth on small instances.

Grids are augmented with bisection snaps of every inner function's zero crossings,
since the discontinuities of the problem sit exactly on those zero sets.
"""

from __future__ import annotations

import itertools
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .functions import estimate_lipschitz
from .model import PolyhedralSet, ProblemSpec
from .sampling import tensor_grid, zero_crossings
from .stationarity import check_sign_conditions

MAX_DIMENSION = 3
VARIANTS = ("MPCC1", "MPCC2", "OnOff")


@dataclass(frozen=True)
class GridSpec:
    resolution: int = 41
    refine: int = 2
    snap: bool = True

    def level_resolution(self, level: int) -> int:
        return (self.resolution - 1) * 2 ** level + 1


@dataclass
class GridResult:
    value: float
    argmin: np.ndarray
    points: np.ndarray
    values: np.ndarray
    feasible: np.ndarray
    level_values: list
    value_tol: float
    spacing: float
    best_point: Optional[np.ndarray] = None

    @property
    def any_feasible(self) -> bool:
        return bool(np.any(self.feasible))

    @property
    def refinement_consistent(self) -> bool:
        lv = [v for v in self.level_values if np.isfinite(v)]
        mono = all(b <= a + 1e-12 for a, b in zip(lv, lv[1:]))
        close = len(lv) < 2 or abs(lv[-1] - lv[-2]) <= self.value_tol
        return mono and close


def _require_bounded(problem: ProblemSpec):
    X = problem.feasible_set
    if not X.is_bounded:
        raise ValueError("grid oracle needs finite bounds on every coordinate")
    if problem.dimension > MAX_DIMENSION:
        raise ValueError(f"grid oracle supports dimension <= {MAX_DIMENSION}")


def _inner_handles(problem: ProblemSpec):
    return [t.inner for t in problem.objective_terms + problem.constraint_terms]


def augmented_points(problem: ProblemSpec, lower, upper, resolution: int, snap: bool = True) -> np.ndarray:
    pts, _ = tensor_grid(lower, upper, resolution)
    if snap and (problem.K or problem.L):
        extra = zero_crossings(_inner_handles(problem), lower, upper, resolution)
        if len(extra):
            pts = np.vstack([pts, extra])
    return pts


def _evaluate(problem: ProblemSpec, pts: np.ndarray, threads: int = 1):
    def chunk(P):
        obj = np.asarray(problem.objective_value(P), dtype=float)
        if problem.L:
            con = np.asarray(problem.constraint_value(P), dtype=float)
            feas = con <= problem.budget
        else:
            feas = np.ones(len(P), dtype=bool)
        feas &= problem.feasible_set.contains_batch(P, 1e-12)
        return obj, feas

    if threads <= 1 or len(pts) < 2000:
        return chunk(pts)
    parts = np.array_split(pts, threads)
    with ThreadPoolExecutor(max_workers=threads) as pool:
        out = list(pool.map(chunk, parts))
    return np.concatenate([o[0] for o in out]), np.concatenate([o[1] for o in out])


def grid_modulus(problem: ProblemSpec, spacing: float, center=None, seed: int = 0) -> float:
    """``1e-6 + (Lip_c + sum Lip_phi) * spacing`` with slopes sampled near ``center``."""
    X = problem.feasible_set
    region = X
    if center is not None:
        lo = np.maximum(center - 2 * spacing, X.lower)
        hi = np.minimum(center + 2 * spacing, X.upper)
        try:
            region = PolyhedralSet(X.dimension, X.A, X.d, lo, hi)
        except ValueError:
            region = X
    lip = estimate_lipschitz(problem.base_cost, region, 200, seed).value
    for t in problem.objective_terms:
        lip += estimate_lipschitz(t.multiplier, region, 200, seed).value
    return 1e-6 + lip * spacing


def _argmin(pts, vals, feas, value, tol):
    if not np.isfinite(value):
        return np.zeros((0, pts.shape[1]))
    sel = feas & (vals <= value + tol)
    out = pts[sel]
    order = np.lexsort(out.T[::-1])
    return out[order]


def grid_minimize(problem: ProblemSpec, grid: GridSpec = GridSpec(), threads: int = 1,
                  seed: int = 0, lower=None, upper=None) -> GridResult:
    """Best feasible value over nested augmented grids; every level keeps coarser points."""
    problem = problem.canonical()
    _require_bounded(problem)
    X = problem.feasible_set
    lo = X.lower if lower is None else np.maximum(np.asarray(lower, float), X.lower)
    hi = X.upper if upper is None else np.minimum(np.asarray(upper, float), X.upper)
    pts = np.zeros((0, problem.dimension))
    level_values = []
    for level in range(grid.refine + 1):
        res = grid.level_resolution(level)
        new = augmented_points(problem, lo, hi, res, grid.snap)
        pts = np.unique(np.vstack([pts, new]), axis=0)
        vals, feas = _evaluate(problem, pts, threads)
        level_values.append(float(np.min(vals[feas])) if np.any(feas) else np.inf)
    res = grid.level_resolution(grid.refine)
    spacing = float(np.max((hi - lo) / max(res - 1, 1)))
    value = level_values[-1]
    center = pts[feas][np.argmin(vals[feas])] if np.any(feas) else None
    tol = grid_modulus(problem, spacing, center, seed)
    return GridResult(value, _argmin(pts, vals, feas, value, tol), pts, vals, feas, level_values, tol, spacing,
                      center)


# -- reformulations by pattern enumeration ----------------------------------------------


def _allowed(variant: str, s: int, g: np.ndarray) -> np.ndarray:
    if variant == "MPCC1":
        return (g >= 0) if s == 1 else (g <= 0)
    if variant == "MPCC2":
        return np.ones_like(g, dtype=bool) if s == 1 else (g <= 0)
    if variant == "OnOff":
        # on-off variable z = 1 - s forces g <= 0 when set
        return (g <= 0) if s == 0 else np.ones_like(g, dtype=bool)
    raise ValueError(f"unknown variant {variant}")


@dataclass
class EnumerationResult:
    variant: str
    value: float
    solutions: list
    patterns_checked: int


def solve_mpcc_by_enumeration(problem: ProblemSpec, variant: str, points: np.ndarray,
                              budget: int = 10 ** 8) -> EnumerationResult:
    """Minimizes the variant over ``points`` and every binary pattern of the term switches.

    Continuous switches in [0, 1] are covered by binary patterns: given ``x`` each
    variant is linear in the switches over a box, so a vertex attains the optimum.
    Constraint terms get their own switches in the functional row.
    """
    problem = problem.canonical()
    K, L = problem.K, problem.L
    if 2 ** (K + L) * len(points) > budget:
        raise RuntimeError("enumeration budget exceeded")
    base = np.asarray(problem.base_cost.evaluate(points), float)
    in_set = problem.feasible_set.contains_batch(points, 1e-12)
    g = [np.asarray(t.inner.evaluate(points), float) for t in problem.objective_terms]
    phi = [np.asarray(t.multiplier.evaluate(points), float) for t in problem.objective_terms]
    h = [np.asarray(t.inner.evaluate(points), float) for t in problem.constraint_terms]
    psi = [np.asarray(t.multiplier.evaluate(points), float) for t in problem.constraint_terms]
    best, sols, checked = np.inf, [], 0
    for pattern in itertools.product((0, 1), repeat=K + L):
        checked += 1
        ok = in_set.copy()
        val = base.copy()
        for k in range(K):
            ok &= _allowed(variant, pattern[k], g[k])
            if pattern[k]:
                val = val + phi[k]
        if L:
            row = np.zeros(len(points))
            for l in range(L):
                ok &= _allowed(variant, pattern[K + l], h[l])
                if pattern[K + l]:
                    row = row + psi[l]
            ok &= row <= problem.budget
        if not np.any(ok):
            continue
        idx = np.flatnonzero(ok)
        j = idx[np.argmin(val[idx])]
        if val[j] < best - 1e-15:
            best, sols = float(val[j]), [(points[j].copy(), pattern)]
        elif abs(val[j] - best) <= 1e-15:
            sols.append((points[j].copy(), pattern))
    return EnumerationResult(variant, best, sols, checked)


@dataclass
class GapRow:
    variant: str
    value: float
    gap: float
    condition: str
    condition_passed: bool
    agrees: bool

    @property
    def expected_equal(self) -> bool:
        return self.condition_passed


@dataclass
class EquivalenceReport:
    grid_value: float
    value_tol: float
    rows: list
    refinement_consistent: bool
    sign_reports: dict = field(default_factory=dict)

    @property
    def consistent(self) -> bool:
        """Every variant whose sign condition holds matches the grid value."""
        return all(r.agrees for r in self.rows if r.condition_passed)

    @property
    def gap_detected(self) -> bool:
        return any(not r.agrees for r in self.rows)

    def row(self, variant: str) -> GapRow:
        return next(r for r in self.rows if r.variant == variant)


def equivalence_report(problem: ProblemSpec, grid: GridSpec = GridSpec(), threads: int = 1,
                       seed: int = 0) -> EquivalenceReport:
    problem = problem.canonical()
    gr = grid_minimize(problem, grid, threads, seed)
    sign = {m: check_sign_conditions(problem, m) for m in ("A", "B")}
    rows = []
    for variant in VARIANTS:
        res = solve_mpcc_by_enumeration(problem, variant, gr.points)
        cond = "A" if variant == "MPCC1" else "B"
        if np.isinf(res.value) and np.isinf(gr.value):
            gap = 0.0
        else:
            gap = float(res.value - gr.value)
        rows.append(GapRow(variant, res.value, gap, cond, sign[cond].passed, abs(gap) <= gr.value_tol))
    return EquivalenceReport(gr.value, gr.value_tol, rows, gr.refinement_consistent, sign)


# -- local checks ---------------------------------------------------------------------


@dataclass
class LocalCheck:
    point: np.ndarray
    value: float
    neighborhood_min: float
    tolerance: float
    points_checked: int

    @property
    def is_local_min(self) -> bool:
        return self.value <= self.neighborhood_min + self.tolerance


def local_grid_check(problem: ProblemSpec, x, radius: float = 1e-2, resolution: int = 41,
                     tolerance: Optional[float] = None) -> LocalCheck:
    """Compares ``Phi(x)`` with the best feasible value on a snapped grid of the box around ``x``."""
    problem = problem.canonical()
    x = np.asarray(x, float)
    X = problem.feasible_set
    lo = np.maximum(x - radius, X.lower)
    hi = np.minimum(x + radius, X.upper)
    pts = augmented_points(problem, lo, hi, resolution)
    pts = np.vstack([pts, x[None, :]])
    vals, feas = _evaluate(problem, pts)
    value = float(problem.objective_value(x))
    best = float(np.min(vals[feas])) if np.any(feas) else np.inf
    if tolerance is None:
        tolerance = 1e-9
    return LocalCheck(x, value, best, tolerance, int(np.sum(feas)))


def grid_local_minimizers(problem: ProblemSpec, grid: GridSpec = GridSpec(resolution=21, refine=0),
                          tol: float = 1e-12) -> np.ndarray:
    """Feasible tensor-grid points no worse than every feasible axis neighbor."""
    problem = problem.canonical()
    _require_bounded(problem)
    X = problem.feasible_set
    pts, axes = tensor_grid(X.lower, X.upper, grid.level_resolution(grid.refine))
    shape = tuple(len(a) for a in axes)
    vals, feas = _evaluate(problem, pts)
    V = np.where(feas, vals, np.inf).reshape(shape)
    ok = feas.reshape(shape).copy()
    for ax in range(len(shape)):
        for shift in (1, -1):
            nb = np.roll(V, shift, axis=ax)
            edge = [slice(None)] * len(shape)
            edge[ax] = 0 if shift == 1 else -1
            nb[tuple(edge)] = np.inf
            ok &= V <= nb + tol
    return pts[ok.ravel()]
