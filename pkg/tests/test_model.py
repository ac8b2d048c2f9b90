import numpy as np
import pytest

from heaviside_opt.functions import constant, coordinate, quadratic
from heaviside_opt.model import (
    Boundary, Flavor, HeavisideTerm, PolyhedralSet, ProblemSpec, Target, build_indicator_product,
    build_l0, build_onoff, build_piecewise_region, heaviside, piecewise_region_value, rewrite_closed,
)

X1 = coordinate(0, 1)


def _closed(psi, f, x):
    return psi(x) * (f(x) >= 0)


@pytest.mark.parametrize("psi,f,x,expected", [
    (constant(1.0, 1), X1, 2.0, 1.0),
    (constant(1.0, 1), X1, 0.0, 1.0),
    (quadratic([[2.0]]), X1 - 1.0, 0.5, 0.0),
])
def test_rewrite_closed_examples(psi, f, x, expected):
    rw = rewrite_closed(HeavisideTerm(psi, f, Flavor.CLOSED))
    x = np.array([x])
    rebuilt = float(rw.constant_part(x)) + rw.sign * float(rw.open_term.value(x))
    assert rebuilt == pytest.approx(expected, abs=1e-15)
    assert float(_closed(psi, f, x)) == pytest.approx(expected, abs=1e-15)


def test_rewrite_requires_closed():
    with pytest.raises(ValueError):
        rewrite_closed(HeavisideTerm(constant(1.0, 1), X1, Flavor.OPEN))


def test_canonicalization_preserves_values():
    rng = np.random.default_rng(3)
    n = 2
    x1, x2 = coordinate(0, n), coordinate(1, n)
    X = PolyhedralSet.box([-1, -1], [1, 1])
    terms_obj = [HeavisideTerm(x1 * 0.5 + 1.0, x2 - 0.2, Flavor.CLOSED, "a"),
                 HeavisideTerm(constant(0.3, n), x1, Flavor.OPEN, "b")]
    terms_con = [HeavisideTerm(constant(1.0, n), x1 + x2, Flavor.CLOSED, "c")]
    p = ProblemSpec(quadratic(np.eye(n)), terms_obj, terms_con, 0.5, X)
    c = p.canonical()
    assert c.is_canonical and not p.is_canonical
    pts = rng.uniform(-1, 1, size=(1000, n))
    pts[:50, 1] = 0.2  # on the closed boundary
    pts[50:100, 0] = -pts[50:100, 1]
    direct_obj = 0.5 * np.sum(pts ** 2, axis=1) + (0.5 * pts[:, 0] + 1.0) * (pts[:, 1] - 0.2 >= 0) + 0.3 * (pts[:, 0] > 0)
    direct_con = 1.0 * (pts[:, 0] + pts[:, 1] >= 0)
    assert np.max(np.abs(c.objective_value(pts) - direct_obj)) <= 1e-12
    assert np.max(np.abs(c.constraint_value(pts) - direct_con)) <= 1e-12
    assert np.max(np.abs(p.objective_value(pts) - direct_obj)) <= 1e-12


@pytest.mark.parametrize("weights,x,expected", [
    ((1, 1), (0, 3), 1.0),
    ((2, 0.5), (-1, 0), 2.0),
    ((1,), (0,), 0.0),
])
def test_build_l0_examples(weights, x, expected):
    terms = build_l0(weights)
    x = np.array(x, dtype=float)
    total = sum(float(t.value(x)) for t in terms)
    assert total == expected
    direct = float(np.sum(np.asarray(weights) * (x != 0)))
    assert total == direct


def test_build_l0_term_values_and_labels():
    terms = build_l0((1, 1), Target.CONSTRAINT)
    vals = [float(t.value(np.array([0.0, 3.0]))) for t in terms]
    assert vals == [0.0, 0.0, 1.0, 0.0]
    assert terms[0].label.startswith("constraint:")


def test_build_l0_random_sparse():
    rng = np.random.default_rng(0)
    w = np.array([0.5, 2.0, 1.5])
    terms = build_l0(w)
    X = rng.normal(size=(500, 3)) * (rng.random((500, 3)) < 0.5)
    total = sum(t.value(X) for t in terms)
    assert np.allclose(total, (X != 0) @ w, atol=0)


def test_build_l0_rejects_negative():
    with pytest.raises(ValueError, match="nonnegative"):
        build_l0((1.0, -0.5))


PIECES = (constant(1.0, 1), constant(2.0, 1), constant(3.0, 1))


@pytest.mark.parametrize("boundary,x,expected", [
    (Boundary.CLOSED_MIDDLE, 0.0, 1.0),
    (Boundary.CLOSED_MIDDLE, -0.5, 2.0),
    (Boundary.CLOSED_MIDDLE, 2.0, 3.0),
    (Boundary.CLOSED_MIDDLE, 1.0, 1.0),
    (Boundary.CLOSED_RIGHT, 1.0, 3.0),
    (Boundary.CLOSED_RIGHT, 0.0, 1.0),
])
def test_piecewise_region_examples(boundary, x, expected):
    terms, base = build_piecewise_region(*PIECES, X1, 0.0, 1.0, boundary)
    x = np.array([x])
    assert float(base(x)) + sum(float(t.value(x)) for t in terms) == expected


@pytest.mark.parametrize("boundary", list(Boundary))
def test_piecewise_region_matches_case_definition(boundary):
    psi1 = X1 + 0.5
    psi2 = quadratic([[2.0]], r=1.0)
    psi3 = 2.0 - X1
    terms, base = build_piecewise_region(psi1, psi2, psi3, X1, 0.0, 1.0, boundary)
    pts = np.concatenate([np.linspace(-2, 2, 401), [0.0, 1.0]])[:, None]
    built = base.evaluate(pts) + sum(t.value(pts) for t in terms)
    direct = piecewise_region_value(psi1, psi2, psi3, X1, 0.0, 1.0, boundary, pts)
    assert np.max(np.abs(built - direct)) <= 1e-14


def test_piecewise_region_rejects_bad_interval():
    with pytest.raises(ValueError):
        build_piecewise_region(*PIECES, X1, 1.0, 1.0)


def test_piecewise_infinite_endpoint_drops_term():
    terms, _ = build_piecewise_region(*PIECES, X1, -np.inf, 1.0)
    assert len(terms) == 2


def _product_value(terms, x):
    total = 0.0
    for t in terms:
        total += float(t.multiplier(x)) * float(heaviside(float(t.inner(x)), t.flavor))
    return total


@pytest.mark.parametrize("x", [0.5, 0.0, -0.1, 1.0, 1.3])
def test_indicator_products_match_direct(x):
    f, g = X1, 1.0 - X1
    xv = np.array([x])
    cc = build_indicator_product(f, g, (Flavor.CLOSED, Flavor.CLOSED))
    assert len(cc) == 1
    assert _product_value(cc, xv) == float((x >= 0) and (1 - x >= 0))
    co = build_indicator_product(f, g, (Flavor.CLOSED, Flavor.OPEN))
    assert _product_value(co, xv) == float((x >= 0) and (1 - x > 0))


def test_indicator_product_example_values():
    co = build_indicator_product(X1, 1.0 - X1, (Flavor.CLOSED, Flavor.OPEN))
    assert _product_value(co, np.array([0.0])) == 1.0
    assert _product_value(co, np.array([-0.1])) == 0.0


@pytest.mark.parametrize("xy,expected", [((2.0, 1.0), 1.0), ((0.0, 1.0), 0.0), ((0.0, 0.0), 1.0)])
def test_onoff_examples(xy, expected):
    term = build_onoff(X1 - 1.0)
    assert term.flavor is Flavor.CLOSED
    assert float(term.value(np.array(xy))) == expected


def test_polyhedral_set_basics():
    X = PolyhedralSet(2, [[1.0, 1.0]], [1.0], [0, 0], [1, 1])
    assert X.is_bounded
    assert X.contains([0.5, 0.5]) and not X.contains([0.8, 0.8])
    G, h = X.step_rows(np.array([0.5, 0.5]))
    assert np.allclose(G, [[1.0, 1.0]]) and np.allclose(h, [0.0])
    with pytest.raises(ValueError):
        PolyhedralSet(1, [[1.0]], [-1.0], [0], [1])
    assert not PolyhedralSet(1).is_bounded


def test_problem_dimension_mismatch():
    with pytest.raises(ValueError):
        ProblemSpec(constant(0.0, 2), [], [], 0.0, PolyhedralSet.box([0], [1]))
