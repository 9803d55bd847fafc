import numpy as np
import pytest

from persuasion.core.errors import FeasibilityError, PreconditionError
from persuasion.model.schemas import Grid, Prior, UtilityFunction
from persuasion.service.analysis_service import AnalysisService, optimal_welfare
from persuasion.service.best_response_service import BestResponseService
from persuasion.service.closed_forms import mu_sup_bisection, solve_mu_sup, sup_large_params
from persuasion.service.equilibrium_service import EquilibriumService
from persuasion.service.multi_receiver_service import MultiReceiverService
from persuasion.service.region_service import RegionService
from persuasion.service.simplex_service import SimplexSolver


def _equilibria() -> EquilibriumService:
    return EquilibriumService(RegionService())


def _analysis() -> AnalysisService:
    regions = RegionService()
    return AnalysisService(
        BestResponseService(SimplexSolver()), EquilibriumService(regions), MultiReceiverService(regions)
    )


# Supermodular, large prior


def test_sup_large_additive_point():
    built = _equilibria().construct_sup_large(Prior(lam=0.75), 0.5)
    p = built.record
    assert p.mu_s == pytest.approx(2.0 / 3.0, abs=1e-12)
    assert p.alpha == pytest.approx(1.0 / 3.0, abs=1e-12)
    assert p.p_hat == pytest.approx(0.5, abs=1e-12)
    assert p.beta == 0.0
    assert built.all_conditions_hold()
    assert built.closed_form_welfare == pytest.approx(1.0)
    (atom,) = built.policy.atoms
    assert atom.point == (1.0, 1.0) and atom.weight == pytest.approx(2.0 / 3.0)


def test_sup_large_strictly_supermodular_point():
    built = _equilibria().construct_sup_large(Prior(lam=0.6), 0.1)
    p = built.record
    assert p.mu_s == pytest.approx(0.27379, abs=1e-5)
    assert p.alpha == pytest.approx(0.404175, abs=1e-5)
    assert p.p_hat == pytest.approx(0.89839, abs=1e-5)
    assert abs(p.quadratic_residual) <= 1e-12
    assert built.all_conditions_hold()
    # welfare 1 - mu^2 (1/2 - rho) below the optimum v(2) = 1
    assert built.closed_form_welfare == pytest.approx(1 - p.mu_s**2 * 0.4)


@pytest.mark.parametrize("lam", [0.6, 0.75, 0.9])
@pytest.mark.parametrize("rho", [0.1, 0.3, 0.5])
def test_sup_large_conditions_hold_across_the_family(lam, rho):
    built = _equilibria().construct_sup_large(Prior(lam=lam), rho)
    assert built.all_conditions_hold(), built.failed_conditions()
    assert np.max(np.abs(built.policy.marginal_means() - lam)) <= 1e-12


def test_sup_mass_closed_form_matches_bisection():
    for lam in np.arange(0.55, 0.96, 0.05):
        for rho in (0.05, 0.1, 0.2, 0.3, 0.4, 0.5):
            assert solve_mu_sup(lam, rho) == pytest.approx(mu_sup_bisection(lam, rho), abs=1e-9)


def test_sup_mass_increases_with_prior_and_complementarity():
    by_lam = [sup_large_params(lam, 0.2).mu_s for lam in (0.55, 0.65, 0.75, 0.85)]
    by_rho = [sup_large_params(0.7, rho).mu_s for rho in (0.1, 0.2, 0.3, 0.4, 0.5)]
    assert by_lam == sorted(by_lam)
    assert by_rho == sorted(by_rho)


def test_sup_large_rejects_out_of_range_inputs():
    with pytest.raises(PreconditionError):
        _equilibria().construct_sup_large(Prior(lam=0.4), 0.3)
    with pytest.raises(PreconditionError):
        _equilibria().construct_sup_large(Prior(lam=0.7), 0.8)


# Submodular, large prior


def test_sub_large_additive_point():
    built = _equilibria().construct_sub_large(Prior(lam=0.55), 0.5)
    p = built.record
    assert p.mu == pytest.approx(2.0 / 11.0, abs=1e-9)
    assert p.alpha == pytest.approx(5.0 / 11.0, abs=1e-9)
    assert p.ell == pytest.approx(0.2, abs=1e-9)
    assert p.p_hat == pytest.approx(0.9, abs=1e-9)
    assert p.beta == pytest.approx(0.0, abs=1e-9)
    assert built.closed_form_welfare == pytest.approx(1.0, abs=1e-12)


def test_sub_large_interior_mass():
    built = _equilibria().construct_sub_large(Prior(lam=0.6), 0.6, mu=0.3)
    p = built.record
    assert p.alpha == pytest.approx(0.405, abs=1e-12)
    assert p.ell == pytest.approx(0.37037037, abs=1e-8)
    assert p.p_hat == pytest.approx(0.85185185, abs=1e-8)
    assert p.beta == pytest.approx(0.105, abs=1e-12)
    assert built.all_conditions_hold()
    assert len(built.policy.segments) == 3
    assert np.max(np.abs(built.policy.marginal_means() - 0.6)) <= 1e-12
    # axis pieces run from (1,0) to (1,ell) and from (0,1) to (ell,1)
    starts = {s.start for s in built.policy.segments}
    assert (1.0, 0.0) in starts and (0.0, 1.0) in starts


def test_sub_large_default_mass_is_the_lower_end_of_the_interval():
    interval = RegionService().sub_feasible_interval(0.6, 0.6)
    built = _equilibria().construct_sub_large(Prior(lam=0.6), 0.6)
    assert built.record.mu == pytest.approx(interval.lower)


def test_sub_large_mass_outside_interval_is_infeasible():
    with pytest.raises(FeasibilityError):
        _equilibria().construct_sub_large(Prior(lam=0.6), 0.6, mu=0.01)


def test_sub_large_rejects_supermodular_rho():
    with pytest.raises(PreconditionError):
        _equilibria().construct_sub_large(Prior(lam=0.7), 0.4)


# Small prior


@pytest.mark.parametrize("lam", [0.1, 0.3, 0.5])
@pytest.mark.parametrize("n", [2, 3, 4])
def test_small_prior_families_reach_optimal_welfare(lam, n):
    eq = _equilibria()
    sup_u, sub_u = UtilityFunction.power(n, 2.0), UtilityFunction.power(n, 0.5)
    sup = eq.construct_sup_small(Prior(lam=lam), sup_u)
    sub = eq.construct_sub_small(Prior(lam=lam), sub_u)
    assert sup.closed_form_welfare == pytest.approx(optimal_welfare(sup_u).value)
    assert sub.closed_form_welfare == pytest.approx(optimal_welfare(sub_u).value)
    assert sup.all_conditions_hold() and sub.all_conditions_hold()


def test_small_prior_families_need_small_prior_and_curvature():
    eq = _equilibria()
    with pytest.raises(PreconditionError):
        eq.construct_sup_small(Prior(lam=0.6), UtilityFunction.power(2, 2.0))
    with pytest.raises(PreconditionError):
        eq.construct_sup_small(Prior(lam=0.3), UtilityFunction.power(2, 0.5))
    with pytest.raises(PreconditionError):
        eq.construct_sub_small(Prior(lam=0.3), UtilityFunction.power(3, 2.0))


def test_weak_curvature_is_accepted():
    built = _equilibria().construct_sup_small(Prior(lam=0.3), UtilityFunction.additive(2))
    assert built.closed_form_welfare == pytest.approx(2.0)


@pytest.mark.parametrize("family, tau", [("sup-small", 2.0), ("sub-small", 0.5)])
def test_small_prior_constructions_verify(family, tau):
    analysis = _analysis()
    prior, u = Prior(lam=0.3), UtilityFunction.power(2, tau)
    built = analysis.construct(family, prior, u)
    report = analysis.verify_construction(built, prior, u, Grid(n=2, points_per_axis=51), K=256)
    assert report.is_equilibrium
    assert not report.red_alert
    assert report.diagnostics.all_clear


# Independent signaling


def test_independent_marginals_match_single_receiver_equilibrium():
    small = EquilibriumService.independent_policy(Prior(lam=0.3), 2).marginal(0)
    assert small.segments[0].end == (0.6,)
    large = EquilibriumService.independent_policy(Prior(lam=0.75), 2).marginal(1)
    assert large.atoms[0].weight == pytest.approx(2.0 / 3.0)
    assert large.marginal_means() == pytest.approx([0.75])


def test_independent_construction_needs_additive_utility():
    eq = _equilibria()
    built = eq.construct_independent_additive(Prior(lam=0.7), UtilityFunction.additive(3))
    assert built.closed_form_welfare == 3.0 and built.marginal_payoff == 0.5
    with pytest.raises(PreconditionError):
        eq.construct_independent_additive(Prior(lam=0.7), UtilityFunction.power(3, 2.0))
