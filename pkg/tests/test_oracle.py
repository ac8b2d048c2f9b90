import numpy as np
import pytest

from heaviside_opt.functions import constant, coordinate, quadratic
from heaviside_opt.model import Flavor, HeavisideTerm, PolyhedralSet, ProblemSpec, build_l0
from heaviside_opt.oracle import (
    GridSpec, augmented_points, equivalence_report, grid_local_minimizers, grid_minimize, local_grid_check,
    solve_mpcc_by_enumeration,
)

X1 = coordinate(0, 1)
BOX = PolyhedralSet.box([-1], [1])


def l0_problem():
    return ProblemSpec(quadratic([[2.0]], [-2.0], 1.0), build_l0([0.5]), (), 0.0, PolyhedralSet.box([-2], [2]))


def negative_multiplier_problem():
    # inf over x > 0 is -0.75; switching the term on at x = -0.5 would give -1
    return ProblemSpec(quadratic([[2.0]], [1.0], 0.25), (HeavisideTerm(constant(-1.0, 1), X1),), (), 0.0, BOX)


def test_level_resolutions_nest():
    g = GridSpec(resolution=5, refine=2)
    assert [g.level_resolution(k) for k in range(3)] == [5, 9, 17]


def test_snapped_points_hit_shared_zero_set():
    pts = augmented_points(l0_problem(), np.array([-2.0]), np.array([2.0]), 4)
    # 4 points do not contain 0; the piece roots of x and -x do
    assert np.any(pts[:, 0] == 0.0)


def test_l0_grid_minimum():
    res = grid_minimize(l0_problem())
    assert res.value == pytest.approx(0.5, abs=1e-12)
    assert res.best_point == pytest.approx([1.0])
    assert res.refinement_consistent
    assert res.value_tol < 0.01


def test_grid_handles_infeasible_problem():
    p = ProblemSpec(constant(0.0, 1), (), (HeavisideTerm(constant(1.0, 1), constant(1.0, 1)),), 0.5, BOX)
    res = grid_minimize(p)
    assert not res.any_feasible and res.value == np.inf


def test_grid_rejects_unbounded_and_large_dimension():
    with pytest.raises(ValueError):
        grid_minimize(ProblemSpec(X1, (), (), 0.0, PolyhedralSet(1, lower=[-1.0])))
    with pytest.raises(ValueError):
        grid_minimize(ProblemSpec(constant(0.0, 4), (), (), 0.0, PolyhedralSet.box([0] * 4, [1] * 4)))


@pytest.mark.parametrize("variant", ["MPCC1", "MPCC2", "OnOff"])
def test_enumeration_matches_l0(variant):
    pts = augmented_points(l0_problem(), np.array([-2.0]), np.array([2.0]), 81)
    res = solve_mpcc_by_enumeration(l0_problem(), variant, pts)
    assert res.value == pytest.approx(0.5, abs=1e-12)
    assert res.patterns_checked == 4


def test_enumeration_budget():
    pts = np.zeros((10, 1))
    with pytest.raises(RuntimeError):
        solve_mpcc_by_enumeration(l0_problem(), "MPCC1", pts, budget=20)
    with pytest.raises(ValueError):
        solve_mpcc_by_enumeration(l0_problem(), "MPCC3", pts)


def test_equivalence_consistent_under_sign_condition():
    rep = equivalence_report(l0_problem())
    assert rep.consistent and not rep.gap_detected
    assert all(r.condition_passed for r in rep.rows)


def test_gap_on_negative_multiplier():
    rep = equivalence_report(negative_multiplier_problem())
    assert rep.grid_value == pytest.approx(-0.75, abs=1e-6)
    assert rep.gap_detected
    assert rep.row("MPCC2").value == pytest.approx(-1.0) and not rep.row("MPCC2").agrees
    assert not rep.row("MPCC2").condition_passed


def test_constraint_terms_in_enumeration():
    # budget forbids x > 0; the switch of the constraint term is forced to follow h
    p = ProblemSpec(-X1, (), (HeavisideTerm(constant(1.0, 1), X1),), 0.5, BOX)
    rep = equivalence_report(p)
    assert rep.grid_value == pytest.approx(0.0, abs=1e-12)
    assert rep.row("MPCC1").agrees and rep.row("MPCC2").agrees and rep.row("OnOff").agrees


def test_local_grid_check():
    p = l0_problem()
    assert local_grid_check(p, [1.0]).is_local_min
    assert local_grid_check(p, [0.0]).is_local_min
    assert not local_grid_check(p, [0.5]).is_local_min


def test_grid_local_minimizers_l0():
    mins = grid_local_minimizers(l0_problem(), GridSpec(resolution=41, refine=0))
    assert {float(m[0]) for m in mins} == {0.0, 1.0}


def test_threads_do_not_change_result():
    p = l0_problem()
    a = grid_minimize(p, GridSpec(201, 2), threads=1)
    b = grid_minimize(p, GridSpec(201, 2), threads=4)
    assert a.value == b.value and np.array_equal(a.argmin, b.argmin)
