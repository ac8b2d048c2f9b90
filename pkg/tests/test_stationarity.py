import numpy as np
import pytest

from heaviside_opt.functions import constant, coordinate, quadratic
from heaviside_opt.model import Flavor, HeavisideTerm, PolyhedralSet, ProblemSpec, build_l0
from heaviside_opt.oracle import GridSpec, grid_local_minimizers, local_grid_check
from heaviside_opt.stationarity import (
    FAILS, INCONCLUSIVE, PSEUDO_B_STATIONARY, Tolerances, build_pulled_down, check_c4_sufficient,
    check_pseudo_b_stationary, check_sign_conditions, enumerate_multiplier_family, l0_restricted_zero_check,
    partition,
)


def l0_problem(n=1, weight=0.5, target=1.0):
    cost = quadratic(2 * np.eye(n), -2 * target * np.ones(n), n * target ** 2)
    return ProblemSpec(cost, build_l0([weight] * n), (), 0.0, PolyhedralSet.box([-2] * n, [2] * n), "l0")


def budget_problem():
    x1 = coordinate(0, 1)
    cost = -x1
    cons = (HeavisideTerm(constant(2.0, 1) - x1 * 2.0, x1 - 0.25, Flavor.OPEN, "c"),)
    return ProblemSpec(cost, (), cons, 0.5, PolyhedralSet.box([-1], [1]), "budget")


def test_partition_classes():
    p = l0_problem(n=2)
    part = partition(p, [0.0, 1.0])
    # terms: +x1, -x1, +x2, -x2
    assert part.k_zero == (0, 1) and part.k_pos == (2,) and part.k_neg == (3,)
    near = partition(p, [1.5e-7, 1.0], eps_part=1e-7)
    assert ("g", 0) in near.sensitive


@pytest.mark.parametrize("x,verdict", [([1.0], PSEUDO_B_STATIONARY), ([0.0], PSEUDO_B_STATIONARY),
                                       ([0.5], FAILS), ([-1.0], FAILS)])
def test_l0_one_dimensional_verdicts(x, verdict):
    cert = check_pseudo_b_stationary(l0_problem(), x)
    assert cert.verdict == verdict
    if verdict == FAILS:
        assert cert.dd_value < 0 and cert.witness is not None


def test_fail_witness_is_a_descent_direction():
    p = l0_problem()
    cert = check_pseudo_b_stationary(p, [0.5])
    v = cert.witness / np.linalg.norm(cert.witness)
    step = 1e-4
    assert float(p.objective_value(np.array([0.5]) + step * v)) < float(p.objective_value(np.array([0.5])))


def test_infeasible_point_is_rejected():
    with pytest.raises(ValueError):
        check_pseudo_b_stationary(l0_problem(), [3.0])
    with pytest.raises(ValueError):
        check_pseudo_b_stationary(budget_problem(), [0.5])


def test_budget_instance_tight_point():
    # row 2 - 2x <= 0.5 requires x >= 0.75 when x > 0.25; the minimizer of -x sits at x = 1
    p = budget_problem()
    assert check_pseudo_b_stationary(p, [1.0]).passed
    # just right of 0.25 the row jumps to 1.5, so 0.25 is a local minimizer too
    assert check_pseudo_b_stationary(p, [0.25]).passed
    assert check_pseudo_b_stationary(p, [0.0]).verdict == FAILS


def test_grid_local_minimizers_never_fail():
    x1 = coordinate(0, 1)
    cost = quadratic([[2.0]], [-0.6])
    terms = (HeavisideTerm(constant(0.3, 1), x1 - 0.1, Flavor.OPEN, "a"),
             HeavisideTerm(x1 * 0.2 + 0.5, -x1 - 0.4, Flavor.OPEN, "b"))
    p = ProblemSpec(cost, terms, (), 0.0, PolyhedralSet.box([-1], [1]))
    for pt in grid_local_minimizers(p, GridSpec(resolution=201, refine=0)):
        if local_grid_check(p, pt, radius=1e-3).is_local_min:
            assert check_pseudo_b_stationary(p, pt).verdict != FAILS


def test_pulled_down_objective_counts_positive_terms():
    p = l0_problem(n=2)
    x = np.array([0.0, 1.0])
    pulled = build_pulled_down(p, partition(p, x), x)
    assert float(pulled.objective(x)) == pytest.approx(float(p.objective_value(x)))
    assert len(pulled.zero_rows()) == 2
    assert pulled.is_feasible(x)


def test_l0_restricted_zero_structure():
    rng = np.random.default_rng(11)
    for _ in range(5):
        x = rng.uniform(-1.5, 1.5, 3)
        x[rng.random(3) < 0.5] = 0.0
        rep = l0_restricted_zero_check(l0_problem(n=3), x)
        assert rep["equal"], rep
        assert rep["zero_support"] == [i for i in range(3) if x[i] == 0.0]


def test_multiplier_family_at_sparse_point():
    p = l0_problem()
    nec = enumerate_multiplier_family(p, [0.0], "Necessary")
    assert len(nec.rows) == 4 and nec.aggregate
    allc = enumerate_multiplier_family(p, [0.0], "SufficientC")
    assert allc.precondition is True
    # dropping a zero row frees x toward 1, where the pulled-down objective descends
    dropped = [r for r in allc.rows if r.xi == (1, 0)][0]
    assert dropped.certificate.verdict == FAILS
    assert not allc.aggregate


def test_multiplier_family_rejects_bad_mode():
    with pytest.raises(ValueError):
        enumerate_multiplier_family(l0_problem(), [0.0], "Everything")


def test_sign_conditions_lp_and_constant():
    x1 = coordinate(0, 1)
    good = ProblemSpec(constant(0.0, 1), (HeavisideTerm(x1 + 1.0, x1, Flavor.OPEN, "g"),), (), 0.0,
                       PolyhedralSet.box([-1], [1]))
    bad = ProblemSpec(constant(0.0, 1), (HeavisideTerm(x1 - 0.5, x1, Flavor.OPEN, "b"),), (), 0.0,
                      PolyhedralSet.box([-1], [1]))
    for mode in ("A", "B"):
        assert check_sign_conditions(good, mode).passed
    # x - 0.5 is -0.5 on the zero set and negative on part of the sublevel set
    assert check_sign_conditions(bad, "A").rows[0].min_value == pytest.approx(-0.5)
    assert not check_sign_conditions(bad, "B").passed
    assert check_sign_conditions(l0_problem(), "B").rows[0].method == "constant"


def test_sign_condition_neighborhood_mode():
    x1 = coordinate(0, 1)
    p = ProblemSpec(constant(0.0, 1), (HeavisideTerm(x1 * x1 - 0.01, x1, Flavor.OPEN, "s"),), (), 0.0,
                    PolyhedralSet.box([-1], [1]))
    rep = check_sign_conditions(p, "C1", x=[0.0], radius=0.05)
    assert not rep.passed and rep.heuristic


def test_functional_descent_condition():
    p = budget_problem()
    rep = check_c4_sufficient(p, [[0.5], [1.0]])
    assert rep.checked == 1 and rep.passed
    assert rep.rows[0].euclidean_value == pytest.approx(-2.0)


def test_unstructured_objective_is_inconclusive():
    from heaviside_opt.functions import black_box
    p = ProblemSpec(black_box(1, lambda x: x[..., 0] ** 2), (), (), 0.0, PolyhedralSet.box([-1], [1]))
    assert check_pseudo_b_stationary(p, [0.3]).verdict == INCONCLUSIVE


def test_tolerances_are_configurable():
    p = l0_problem()
    loose = Tolerances(eps_part=1e-3)
    assert partition(p, [5e-4], loose.eps_part).k_zero == (0, 1)
