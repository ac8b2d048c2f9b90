import numpy as np
import pytest

from instances import asymmetric_steklov, continuation_instances, shoulder_instance, three_piece_instance
from heaviside_opt.approx import make_modified_hinge
from heaviside_opt.continuation import (
    ApproximatedObjective, HandleObjective, InnerStop, Schedule, certify_limit, diagnose_conditions,
    inner_solve, run_continuation,
)
from heaviside_opt.functions import fd_dir_derivative_oracle, quadratic
from heaviside_opt.model import PolyhedralSet
from heaviside_opt.oracle import GridSpec, grid_minimize, local_grid_check
from heaviside_opt.stationarity import region_problem_report


def test_schedule_deltas():
    d = Schedule().deltas()
    assert len(d) == 24 and d[0] == 0.5 and d[1] == 0.25


def test_inner_solve_smooth_projection():
    # (x1 - 2)^2 + (x2 + 3)^2 on the unit box: projected minimizer (1, -1)
    f = quadratic(2 * np.eye(2), [-4.0, 6.0], 13.0)
    X = PolyhedralSet.box([-1, -1], [1, 1])
    rep = inner_solve(HandleObjective(f), X, [0.0, 0.0])
    assert rep.converged and rep.x == pytest.approx([1.0, -1.0], abs=1e-4)


def test_inner_solve_zero_iterations_at_stationary_point():
    f = quadratic([[2.0]], [0.0], 0.0)
    rep = inner_solve(HandleObjective(f), PolyhedralSet.box([-1], [1]), [0.0])
    assert rep.iterations == 0 and rep.converged


def test_inner_solve_nonconvex_terminal_dd():
    f = quadratic([[-2.0]], [0.3], 0.0)
    X = PolyhedralSet.box([-1], [1])
    rep = inner_solve(HandleObjective(f), X, [0.2])
    assert rep.converged
    for v in (1.0, -1.0):
        xv = rep.x + 1e-3 * v
        if X.contains(xv):
            fd = fd_dir_derivative_oracle(lambda s: float(f(s)), rep.x, [v], [1e-6, 5e-7, 2.5e-7])
            assert fd >= -1e-6


def test_line_search_monotone():
    p, fam = continuation_instances()["l0-2d"]
    obj = ApproximatedObjective(p, make_modified_hinge(), 1.0, 0.25)
    rep = inner_solve(obj, p.feasible_set, [0.0, 0.0])
    vals = [row[1] for row in rep.log]
    assert all(b <= a + 1e-15 for a, b in zip(vals, vals[1:]))


def test_exact_outside_support():
    p, _ = continuation_instances()["jump-objective"]
    obj = ApproximatedObjective(p, make_modified_hinge(), 1.0, 1e-4)
    for x in ([0.5], [-0.5]):
        assert obj.value(np.array(x)) == pytest.approx(float(p.objective_value(np.array(x))), abs=1e-15)


@pytest.mark.parametrize("name", sorted(continuation_instances()))
def test_continuation_limit_certified(name):
    p, fam = continuation_instances()[name]
    tr = run_continuation(p, fam)
    assert certify_limit(tr, p).passed
    local = local_grid_check(p, tr.limit, radius=1e-2, resolution=81)
    assert abs(tr.limit_value - local.neighborhood_min) <= 1e-4
    cond = diagnose_conditions(tr, p)
    for c in ("C1", "C2", "C5"):
        assert cond.status(c) == "Pass"


def test_l0_limit_is_one():
    p, _ = continuation_instances()["l0-1d"]
    tr = run_continuation(p, schedule=Schedule(stages=20))
    assert tr.limit == pytest.approx([1.0], abs=1e-7)
    assert grid_minimize(p, GridSpec(41, 1)).value == pytest.approx(tr.limit_value, abs=1e-9)


def test_weak_penalty_flags_infeasible_limit():
    p, fam = continuation_instances()["capped"]
    tr = run_continuation(p, fam, lam=0.5)
    assert not tr.limit_feasible and tr.infeasible_stages


def test_shoulder_instance_fails_c3_and_emits_weak_report():
    p = shoulder_instance()
    tr = run_continuation(p, asymmetric_steklov())
    rep = diagnose_conditions(tr, p)
    assert rep.status("C3") == "Fail"
    seq = tr.c3_values[("h", 0)]
    assert seq[-1] == pytest.approx(0.4, abs=1e-5)
    weak = rep.weak
    assert weak is not None and weak.in_unit_interval
    assert all(0.0 <= v <= 1.0 for v in list(weak.xi_star.values()) + list(weak.mu_star.values()))
    assert weak.weak_row_value <= p.budget + 1e-6
    assert weak.certificate.passed


def test_three_piece_limit_names_one_problem():
    p, (psi1, psi2, psi3, f, a, b, X) = three_piece_instance()
    tr = run_continuation(p, x0=[0.3])
    assert tr.limit == pytest.approx([0.0], abs=1e-6)
    rep = region_problem_report(psi1, psi2, psi3, f, a, b, X, tr.limit)
    assert rep.stationary_names == ["min psi1 s.t. f >= a (f = a)"]
    assert rep.named == rep.applicable_name
