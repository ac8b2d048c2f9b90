"""Shared instances for the test suite."""

import numpy as np

from heaviside_opt.approx import (
    make_l0_family, make_modified_hinge, make_steklov_cdf, make_truncation_family, psi_exponential, psi_power,
)
from heaviside_opt.expr import compile_expression
from heaviside_opt.functions import (
    FunctionHandle, SmoothPiece, absolute, affine, constant, coordinate, maximum, minimum, quadratic,
)
from heaviside_opt.model import Boundary, Flavor, HeavisideTerm, PolyhedralSet, ProblemSpec, build_l0, build_piecewise_region


def _exp_sum(n):
    def value(X):
        return np.exp(0.3 * np.sum(X, axis=-1))

    def grad(x):
        return 0.3 * np.exp(0.3 * np.sum(x)) * np.ones(n)

    return FunctionHandle(n, (SmoothPiece(n, value, grad, convex=True),), name="exp-sum")


def function_classes():
    """One representative per structural class: smooth, max-of-smooth, DC, compiled."""
    n = 2
    x1, x2 = coordinate(0, n), coordinate(1, n)
    q = quadratic([[2.0, 0.5], [0.5, 1.0]], [0.1, -0.3], 0.2)
    return {
        "smooth-quadratic": q,
        "smooth-exp": _exp_sum(n),
        "affine": affine([1.5, -2.0], 0.3),
        "max-of-smooth": maximum(q, x1 - x2, _exp_sum(n) - 1.0),
        "abs": absolute(x1 - 0.5 * x2),
        "dc": maximum(x1, x2 * 2.0) - maximum(q * 0.5, x1 + x2),
        "min": minimum(x1 * x1, x2 + 0.1, x1 - x2),
        "compiled": compile_expression("max(x1**2, x2) - abs(x1 - 2*x2) + min(x1, 3*x2 - 1)", n),
    }


def kink_points(name):
    """Points where pieces tie for the nonsmooth classes."""
    pts = {
        "max-of-smooth": [(0.0, 0.0)],
        "abs": [(0.5, 1.0), (0.0, 0.0), (1.0, 2.0)],
        "dc": [(0.4, 0.2), (0.0, 0.0)],
        "min": [(0.0, -0.1), (1.0, 1.0)],
        "compiled": [(0.0, 0.0), (1.0, 1.0), (2.0, 1.0)],
    }
    return [np.array(p) for p in pts.get(name, [])]


def approximation_families():
    return {
        "modified-hinge": make_modified_hinge(),
        "truncation-power2": make_truncation_family(psi_power(2.0), lambda d: d / (1.0 + d), lambda d: np.sqrt(d)),
        "truncation-exp": make_truncation_family(psi_exponential(2.0), lambda d: d ** 0.5 / (1 + d ** 0.5), lambda d: d),
        "asymmetric-steklov": make_steklov_cdf("asymmetric", lambda d: d ** 2, lambda d: d),
        "steklov": make_steklov_cdf("symmetric"),
        "l0-sum": make_l0_family(make_modified_hinge(), make_modified_hinge()),
    }


def relative_error(a, b):
    return abs(a - b) / max(1.0, abs(a), abs(b))


def asymmetric_steklov():
    return make_steklov_cdf("asymmetric", lambda d: d ** 2, lambda d: d)


def continuation_instances():
    """``name -> (problem, families)``; inner functions affine and multipliers smooth or constant."""
    x = coordinate(0, 1)
    y1, y2 = coordinate(0, 2), coordinate(1, 2)
    box1 = PolyhedralSet.box([-1], [1])
    box2 = PolyhedralSet.box([-1, -1], [1, 1])
    return {
        "l0-1d": (ProblemSpec(quadratic([[2.0]], [-2.0], 1.0), build_l0([0.5]), (), 0.0,
                              PolyhedralSet.box([-2], [2]), "l0-1d"), None),
        "l0-2d": (ProblemSpec(quadratic(2 * np.eye(2), [-2.0, 0.6], 1.09), build_l0([0.5, 0.5]), (), 0.0,
                              PolyhedralSet.box([-2, -2], [2, 2]), "l0-2d"), None),
        "capped": (ProblemSpec(-x, (), (HeavisideTerm(constant(1.0, 1), x - 0.5, Flavor.OPEN, "on"),), 0.5,
                               box1, "capped"), asymmetric_steklov()),
        "jump-objective": (ProblemSpec(quadratic([[2.0]], [-1.0], 0.25),
                                       (HeavisideTerm(constant(0.3, 1), x - 0.2, Flavor.OPEN, "jump"),), (), 0.0,
                                       box1, "jump-objective"), None),
        "mixed-2d": (ProblemSpec(quadratic(2 * np.eye(2), [-1.0, -1.0], 0.5),
                                 (HeavisideTerm(y1 * 0.2 + 0.4, y1 + y2 - 0.6, Flavor.OPEN, "cost"),),
                                 (HeavisideTerm(constant(1.0, 2), y1 - y2, Flavor.OPEN, "tilt"),), 0.5,
                                 box2, "mixed-2d"), asymmetric_steklov()),
    }


def shoulder_instance():
    """Feasible set is x <= 0, but the penalized iterates sit on the approximation
    shoulder where theta of the first constraint term tends to 0.4."""
    x = coordinate(0, 1)
    cons = (HeavisideTerm(constant(1.0, 1), x, Flavor.OPEN, "switch"),
            HeavisideTerm(x + 0.5, constant(1.0, 1), Flavor.OPEN, "always"))
    return ProblemSpec(-x, (), cons, 0.9, PolyhedralSet.box([-1], [1]), "shoulder")


def three_piece_instance():
    """Closed-right three-piece function with both discontinuity sign rules satisfied."""
    x = coordinate(0, 1)
    psi1, psi2, psi3 = x + 0.5, quadratic([[2.0]], [0.5], 1.0), 2.0 - x
    X = PolyhedralSet.box([-1], [1.2])
    terms, base = build_piecewise_region(psi1, psi2, psi3, x, 0.0, 1.0, Boundary.CLOSED_RIGHT)
    return ProblemSpec(base, terms, (), 0.0, X, "three-piece"), (psi1, psi2, psi3, x, 0.0, 1.0, X)
