import numpy as np
import pytest

from persuasion.model.schemas import Grid
from persuasion.service.simplex_service import (
    LinearProgram,
    LPStatus,
    PivotRule,
    SimplexSolver,
    support_enumeration_oracle,
)


def _random_best_response_lp(rng):
    n = int(rng.integers(1, 3))
    per_axis = int(rng.integers(5, 21)) if n == 1 else int(rng.integers(3, 8))
    points = Grid(n=n, points_per_axis=per_axis).points()
    c = rng.random(len(points)) * rng.integers(1, 4)
    A = np.vstack([points.T, np.ones(len(points))])
    b = np.append(rng.uniform(0.05, 0.95, size=n), 1.0)
    return LinearProgram(c=c, A=A, b=b)


def test_simplex_matches_support_enumeration_on_random_instances():
    rng = np.random.default_rng(2024)
    solver = SimplexSolver()
    for _ in range(50):
        lp = _random_best_response_lp(rng)
        sol = solver.solve(lp)
        assert sol.status is LPStatus.OPTIMAL
        oracle = support_enumeration_oracle(lp)
        assert sol.value == pytest.approx(oracle, abs=1e-9)
        assert sol.duality_gap <= 1e-9
        assert sol.max_reduced_cost <= 1e-9
        assert sol.primal_residual <= 1e-9
        assert np.all(sol.x >= 0.0)


def test_bland_rule_reaches_the_same_optimum():
    rng = np.random.default_rng(99)
    for _ in range(10):
        lp = _random_best_response_lp(rng)
        dantzig = SimplexSolver(pivot_rule="dantzig").solve(lp)
        bland = SimplexSolver(pivot_rule=PivotRule.BLAND).solve(lp)
        assert bland.value == pytest.approx(dantzig.value, abs=1e-9)


def test_small_lp_with_known_solution():
    # max x + 2y  s.t.  x + y = 1
    sol = SimplexSolver().solve(LinearProgram(c=[1.0, 2.0], A=[[1.0, 1.0]], b=[1.0]))
    assert sol.is_optimal
    assert sol.value == pytest.approx(2.0)
    assert sol.x == pytest.approx([0.0, 1.0])
    assert sol.duals == pytest.approx([2.0])


def test_negative_right_hand_side_is_handled():
    # max -x  s.t.  -x - y = -2, y - z = 0.5
    lp = LinearProgram(c=[-1.0, 0.0, 0.0], A=[[-1.0, -1.0, 0.0], [0.0, 1.0, -1.0]], b=[-2.0, 0.5])
    sol = SimplexSolver().solve(lp)
    assert sol.is_optimal
    assert sol.value == pytest.approx(0.0)
    assert sol.duality_gap <= 1e-9


def test_infeasible_status():
    sol = SimplexSolver().solve(LinearProgram(c=[1.0, 1.0], A=[[1.0, 1.0]], b=[-1.0]))
    assert sol.status is LPStatus.INFEASIBLE
    assert not sol.is_optimal


def test_unbounded_status():
    sol = SimplexSolver().solve(LinearProgram(c=[1.0, 0.0], A=[[1.0, -1.0]], b=[0.0]))
    assert sol.status is LPStatus.UNBOUNDED


def test_linear_program_shape_checks():
    with pytest.raises(ValueError):
        LinearProgram(c=[1.0, 2.0], A=[[1.0, 1.0, 1.0]], b=[1.0])
    with pytest.raises(ValueError):
        LinearProgram(c=[np.nan], A=[[1.0]], b=[1.0])
