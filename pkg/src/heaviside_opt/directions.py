"""Direction-finding LPs over unions of polyhedral cones.

The objective and each constraint are :class:`PLDir` models ``max_i a_i.v - max_j b_j.v``.
Fixing one concave-side row per model turns the problem into a single LP, so the
exact minimum is the smallest LP value over all selections. Each LP is solved
with HiGHS through ``scipy.optimize.linprog``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import linprog

from .functions import PLDir


class PieceBudgetExceeded(RuntimeError):
    def __init__(self, count: int, budget: int):
        super().__init__(f"{count} piece selections exceed the budget of {budget}")
        self.count = count
        self.budget = budget


@dataclass
class ConeRow:
    """Constraint ``offset + model(v) <= weight * (objective model value)``."""

    model: PLDir
    offset: float = 0.0
    weight: float = 0.0
    label: str = ""


@dataclass
class DirectionResult:
    value: float
    v: Optional[np.ndarray]
    lp_count: int
    method: str
    selections: int = 0
    notes: list = field(default_factory=list)


def selection_count(objective: PLDir, rows: Sequence[ConeRow]) -> int:
    count = objective.concave_count
    for r in rows:
        count *= r.model.concave_count
    return count


def minimize_pl(
    objective: PLDir,
    rows: Sequence[ConeRow] = (),
    G: Optional[np.ndarray] = None,
    h: Optional[np.ndarray] = None,
    lb=None,
    ub=None,
    piece_budget: int = 4096,
) -> DirectionResult:
    """Minimize ``objective(v)`` subject to the rows, ``G v <= h`` and ``lb <= v <= ub``."""
    n = objective.n
    lb = -np.ones(n) if lb is None else np.asarray(lb, dtype=float)
    ub = np.ones(n) if ub is None else np.asarray(ub, dtype=float)
    G = np.zeros((0, n)) if G is None else np.asarray(G, dtype=float).reshape(-1, n)
    h = np.zeros(G.shape[0]) if h is None else np.asarray(h, dtype=float).ravel()
    total = selection_count(objective, rows)
    if total > piece_budget:
        raise PieceBudgetExceeded(total, piece_budget)

    bounds = [(float(l), float(u)) for l, u in zip(lb, ub)] + [(None, None)]
    A_obj = np.hstack([objective.A, -np.ones((objective.A.shape[0], 1))])
    b_obj = np.zeros(objective.A.shape[0])
    G_full = np.hstack([G, np.zeros((G.shape[0], 1))])

    best_val, best_v, lps = np.inf, None, 0
    choices = [range(objective.concave_count)] + [range(r.model.concave_count) for r in rows]
    for sel in itertools.product(*choices):
        b0 = objective.B[sel[0]]
        blocks, rhs = [A_obj, G_full], [b_obj, h]
        for r, j in zip(rows, sel[1:]):
            diff = r.model.A - r.model.B[j] + r.weight * b0
            blocks.append(np.hstack([diff, -r.weight * np.ones((diff.shape[0], 1))]))
            rhs.append(np.full(diff.shape[0], -r.offset))
        c = np.append(-b0, 1.0)
        res = linprog(c, A_ub=np.vstack(blocks), b_ub=np.concatenate(rhs), bounds=bounds, method="highs")
        lps += 1
        if res.status != 0:
            continue
        if res.fun < best_val - 1e-15:
            best_val, best_v = float(res.fun), res.x[:n].copy()
    method = "LinearizedLP" if total == 1 else "PieceEnumeration"
    return DirectionResult(best_val, best_v, lps, method, total)


def sample_min(
    objective: PLDir,
    rows: Sequence[ConeRow] = (),
    G: Optional[np.ndarray] = None,
    h: Optional[np.ndarray] = None,
    lb=None,
    ub=None,
    count: int = 2000,
    seed: int = 0,
    feas_tol: float = 1e-12,
) -> DirectionResult:
    """Random directions in the box, keeping those that satisfy every row."""
    n = objective.n
    lb = -np.ones(n) if lb is None else np.asarray(lb, dtype=float)
    ub = np.ones(n) if ub is None else np.asarray(ub, dtype=float)
    rng = np.random.default_rng(seed)
    best_val, best_v = np.inf, None
    for _ in range(count):
        v = lb + (ub - lb) * rng.random(n)
        if G is not None and len(G) and np.any(G @ v > (0 if h is None else h) + feas_tol):
            continue
        val = objective.evaluate(v)
        if any(r.offset + r.model.evaluate(v) > r.weight * val + feas_tol for r in rows):
            continue
        if val < best_val:
            best_val, best_v = val, v
    if best_v is None:
        best_val, best_v = 0.0, np.zeros(n)
    return DirectionResult(best_val, best_v, 0, "DirectionSampling", count)


def max_strict_slack(
    rows: Sequence[ConeRow], G: Optional[np.ndarray], n: int, piece_budget: int = 4096
) -> tuple:
    """Largest ``s <= 1`` with ``model(v) + s <= 0`` for all rows, ``G v <= 0``, ``|v| <= 1``."""
    G = np.zeros((0, n)) if G is None else np.asarray(G, dtype=float).reshape(-1, n)
    total = 1
    for r in rows:
        total *= r.model.concave_count
    if total > piece_budget:
        raise PieceBudgetExceeded(total, piece_budget)
    bounds = [(-1.0, 1.0)] * n + [(None, 1.0)]
    best_s, best_v = -np.inf, None
    for sel in itertools.product(*[range(r.model.concave_count) for r in rows]):
        blocks = [np.hstack([G, np.zeros((G.shape[0], 1))])]
        for r, j in zip(rows, sel):
            diff = r.model.A - r.model.B[j]
            blocks.append(np.hstack([diff, np.ones((diff.shape[0], 1))]))
        A = np.vstack(blocks)
        c = np.zeros(n + 1)
        c[-1] = -1.0
        res = linprog(c, A_ub=A, b_ub=np.zeros(A.shape[0]), bounds=bounds, method="highs")
        if res.status == 0 and -res.fun > best_s:
            best_s, best_v = float(-res.fun), res.x[:n].copy()
    return best_s, best_v
