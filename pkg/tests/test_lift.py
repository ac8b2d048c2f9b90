import numpy as np
import pytest

from heaviside_opt.functions import affine, constant, coordinate, quadratic
from heaviside_opt.lift import (
    DOWN, UP, BranchBudgetExceeded, LiftedProblem, branch_problem, choose_penalty, epi_membership,
    penalty_from_constants, recover_auxiliary, solve_lifted, tangent_formula_probe, term_value,
)
from heaviside_opt.model import Flavor, HeavisideTerm, PolyhedralSet, ProblemSpec, build_l0

X1 = coordinate(0, 1)
BOX = PolyhedralSet.box([-1], [1])


def l0_problem():
    return ProblemSpec(quadratic([[2.0]], [-2.0], 1.0), build_l0([0.5]), (), 0.0,
                       PolyhedralSet.box([-2], [2]), "l0")


def budget_problem():
    # feasible region is x <= 0; minimizer x = 0 with value 0
    return ProblemSpec(-X1 * 10.0, (), (HeavisideTerm(constant(1.0, 1), X1, Flavor.OPEN, "on"),), 0.5, BOX)


@pytest.mark.parametrize("t,x,inside", [(1.5, 0.5, True), (1.4, 0.5, False), (0.0, -0.5, True),
                                        (-0.1, -0.5, False), (0.0, 0.0, True), (-1e-3, 0.0, False)])
def test_epigraph_membership(t, x, inside):
    term = HeavisideTerm(X1 + 1.0, X1)
    assert epi_membership(t, np.array([x]), term) is inside
    assert (t >= term_value(np.array([x]), term)) is inside


def test_penalty_formula():
    assert penalty_from_constants(2.0, 3.0, 2, 1.5) == pytest.approx(1.5 * 8 + 1)
    choice = choose_penalty(l0_problem())
    assert choice.skipped and choice.value >= 1.5 * 6 - 1e-9
    with pytest.raises(ValueError):
        choose_penalty(l0_problem(), safety=0.5)


def test_branch_problem_constraints():
    obj, cons = branch_problem(l0_problem(), 1.0, (UP, DOWN))
    x = np.array([1.0])
    assert float(obj(x)) == pytest.approx(0.5)
    # Up on +x requires x >= 0; Down on -x requires -x <= 0
    assert [float(c(x)) for c in cons] == [-1.0, -1.0]


def test_l0_lift_branches():
    res = solve_lifted(l0_problem())
    assert res.objective == pytest.approx(0.5, abs=1e-7)
    assert res.x == pytest.approx([1.0], abs=1e-6)
    by = {b.assignment: b.objective for b in res.branches}
    assert by[(UP, UP)] == pytest.approx(2.0, abs=1e-6)
    assert by[(UP, DOWN)] == pytest.approx(0.5, abs=1e-6)
    assert by[(DOWN, UP)] == pytest.approx(1.5, abs=1e-6)
    assert by[(DOWN, DOWN)] == pytest.approx(1.0, abs=1e-6)
    assert res.certificate.passed
    assert list(res.t) == [term_value(res.x, t) for t in l0_problem().objective_terms]


def test_recovery_sets_term_values():
    p = l0_problem()
    x = np.array([1.0])
    rec = recover_auxiliary(x, np.array([0.7, 0.2]), np.zeros(0), p, 1.0)
    assert list(rec.t) == [0.5, 0.0]
    assert rec.objective_after <= rec.objective_before
    with pytest.raises(ValueError):
        recover_auxiliary(x, np.array([0.1, 0.0]), np.zeros(0), p, 1.0)


def test_recovery_classifies_slack_block():
    p = budget_problem()
    x = np.array([-0.5])
    rec = recover_auxiliary(x, np.zeros(0), np.array([0.3]), p, 100.0)
    assert rec.case == "i" and rec.feasibility == "slack" and rec.s[0] == 0.0
    rec2 = recover_auxiliary(np.array([0.5]), np.zeros(0), np.array([1.0]), p, 100.0)
    assert rec2.feasibility == "infeasible"


def test_budget_lift_strong_and_weak_penalty():
    p = budget_problem()
    strong = solve_lifted(p, lam=100.0)
    assert strong.x == pytest.approx([0.0], abs=1e-6)
    assert not strong.infeasible_recovery and strong.certificate.passed
    weak = solve_lifted(p, lam=1.0)
    assert weak.infeasible_recovery and weak.certificate is None
    assert any("penalty too small" in n for n in weak.notes)


def test_lifted_objective():
    lp = LiftedProblem.build(budget_problem(), 3.0)
    assert lp.objective(np.array([0.2]), np.zeros(0), np.array([1.0])) == pytest.approx(-2.0 + 1.5)
    assert lp.is_feasible(np.array([0.2]), np.zeros(0), np.array([1.0]))
    assert not lp.is_feasible(np.array([0.2]), np.zeros(0), np.array([0.5]))


def test_branch_budget():
    p = ProblemSpec(constant(0.0, 1), build_l0([1.0]) * 3, (), 0.0, BOX)
    with pytest.raises(BranchBudgetExceeded):
        solve_lifted(p, branch_budget=32)


@pytest.mark.parametrize("psi,t,x,case", [
    (X1 + 1.0, 1.5, 0.5, "b:f>0"),
    (X1 + 1.0, 0.0, -0.5, "b:f<0"),
    (X1 + 1.0, 0.0, 0.0, "b:f=0<psi"),
    (X1 * 1.0, 0.0, 0.0, "b:f=0=psi"),
    (X1 + 1.0, 2.0, 0.5, "c:free"),
    (X1 + 1.0, 2.0, 0.0, "c:f=0<psi<t"),
    (X1 + 1.0, 0.5, 0.0, "c:f=0,t<psi"),
    (X1 + 1.0, 1.0, 0.0, "c:f=0<psi=t"),
])
def test_tangent_probe_cases(psi, t, x, case):
    rep = tangent_formula_probe(HeavisideTerm(psi, X1), BOX, t, [x], directions=200)
    assert rep.case == case
    assert rep.passed, rep


def test_tangent_probe_two_dimensional_kinked_data():
    from heaviside_opt.functions import maximum
    x1, x2 = coordinate(0, 2), coordinate(1, 2)
    term = HeavisideTerm(maximum(x1, x2) + 1.0, maximum(x1 - x2, -x1))
    S = PolyhedralSet(2, [[1.0, 1.0]], [1.0], [-1, -1], [1, 1])
    for t in (0.5, 1.0, 2.0):
        assert tangent_formula_probe(term, S, t, [0.0, 0.0], directions=200).passed


def test_tangent_probe_rejects_outside_points():
    with pytest.raises(ValueError):
        tangent_formula_probe(HeavisideTerm(X1 + 1.0, X1), BOX, 0.0, [0.5])
    with pytest.raises(ValueError):
        tangent_formula_probe(HeavisideTerm(X1 * X1, X1), BOX, 1.0, [0.5])
