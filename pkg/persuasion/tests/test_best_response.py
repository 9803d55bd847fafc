import numpy as np
import pytest

from persuasion.core.errors import PreconditionError
from persuasion.model.schemas import Grid, Prior, UtilityFunction
from persuasion.service.best_response_service import BestResponseService, grid_payoffs
from persuasion.service.equilibrium_service import EquilibriumService
from persuasion.service.policy_service import null_policy
from persuasion.service.region_service import RegionService
from persuasion.service.simplex_service import LinearProgram, SimplexSolver, support_enumeration_oracle


def _service() -> BestResponseService:
    return BestResponseService(SimplexSolver())


def test_single_receiver_best_response_against_point_mass():
    prior = Prior(lam=0.3)
    u = UtilityFunction.anonymous([0.0, 1.0])
    grid = Grid(n=1, points_per_axis=11)
    result = _service().best_response(null_policy(prior, 1), prior, u, grid, K=16)
    # mix posterior 0.4 (wins) with 0 (loses): 3/4 of the mass at 0.4
    assert result.value == pytest.approx(0.75, abs=1e-12)
    assert result.certificate.alpha[0] == pytest.approx(2.5, abs=1e-9)
    assert result.certificate.beta == pytest.approx(0.0, abs=1e-9)
    assert result.envelope_violation <= 1e-9
    assert result.duality_gap <= 1e-9
    assert result.policy.marginal_means() == pytest.approx([0.3], abs=1e-12)
    support = sorted(a.point[0] for a in result.policy.atoms)
    assert support == pytest.approx([0.0, 0.4])


def test_best_response_value_matches_oracle():
    prior = Prior(lam=0.3)
    u = UtilityFunction.anonymous([0.0, 0.4, 1.0])
    grid = Grid(n=2, points_per_axis=6)
    opponent = null_policy(prior, 2)
    result = _service().best_response(opponent, prior, u, grid, K=8)
    values = np.asarray(grid_payoffs(opponent, u, grid, 8))
    points = grid.points()
    lp = LinearProgram(c=values, A=np.vstack([points.T, np.ones(len(points))]), b=[0.3, 0.3, 1.0])
    assert result.value == pytest.approx(support_enumeration_oracle(lp), abs=1e-9)
    assert result.support_slack <= 1e-9
    assert result.certificate.is_nonnegative()


def test_extra_points_join_the_lp_columns():
    prior = Prior(lam=0.3)
    u = UtilityFunction.anonymous([0.0, 1.0])
    grid = Grid(n=1, points_per_axis=3)
    coarse = _service().best_response(null_policy(prior, 1), prior, u, grid, K=4)
    refined = _service().best_response(
        null_policy(prior, 1), prior, u, grid, K=4, extra_points=np.array([[0.3000001]])
    )
    # on {0, 1/2, 1} the best mix is 0.6 at 1/2; the extra point lifts it to ~1
    assert coarse.value == pytest.approx(0.6)
    assert refined.value > 0.99


def test_grid_payoffs_are_cached_and_read_only():
    prior = Prior(lam=0.4)
    u = UtilityFunction.additive(2)
    grid = Grid(n=2, points_per_axis=5)
    opponent = null_policy(prior, 2)
    first = grid_payoffs(opponent, u, grid, 8)
    assert grid_payoffs(opponent, u, grid, 8) is first
    assert not first.flags.writeable


def test_dimension_mismatch_is_rejected():
    prior = Prior(lam=0.4)
    with pytest.raises(PreconditionError):
        _service().best_response(
            null_policy(prior, 2), prior, UtilityFunction.additive(2), Grid(n=1, points_per_axis=5), K=4
        )


@pytest.mark.parametrize("lam", [0.3, 0.75])
@pytest.mark.parametrize("step", [0.02, 0.01])
def test_per_receiver_best_response_to_independent_policy(lam, step):
    prior = Prior(lam=lam)
    u = UtilityFunction.additive(3)
    independent = EquilibriumService(RegionService()).independent_policy(prior, 3)
    results = _service().per_receiver_best_response(
        independent, prior, u, points_per_axis=int(round(1 / step)) + 1, K=512
    )
    assert len(results) == 3
    for r in results:
        assert abs(r.value - 0.5) <= 2 * step


def test_per_receiver_decomposition_needs_additive_utility():
    prior = Prior(lam=0.3)
    independent = EquilibriumService(RegionService()).independent_policy(prior, 2)
    with pytest.raises(PreconditionError):
        _service().per_receiver_best_response(independent, prior, UtilityFunction.power(2, 2.0), 11, 16)


@pytest.mark.parametrize(
    "n, opponent_of",
    [
        (1, lambda prior: null_policy(prior, 1)),
        (2, lambda prior: null_policy(prior, 2)),
        (2, lambda prior: EquilibriumService(RegionService()).construct_sup_large(prior, 0.3).policy),
    ],
)
def test_best_response_value_grows_with_nested_grids(n, opponent_of):
    prior = Prior(lam=0.7)
    u = UtilityFunction.anonymous([0.0, 1.0]) if n == 1 else UtilityFunction.two_receiver(0.3)
    opponent = opponent_of(prior)
    values = [
        _service().best_response(opponent, prior, u, Grid(n=n, points_per_axis=points), K=64).value
        for points in (26, 51, 101)
    ]
    assert values[0] <= values[1] + 1e-9
    assert values[1] <= values[2] + 1e-9
