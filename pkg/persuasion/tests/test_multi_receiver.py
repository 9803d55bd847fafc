import pytest

from persuasion.core.errors import PreconditionError
from persuasion.model.schemas import Prior, UtilityFunction
from persuasion.service.analysis_service import AnalysisService
from persuasion.service.best_response_service import BestResponseService
from persuasion.service.closed_forms import (
    multi_scalars,
    sub_large_params,
    sub_multi_even_params,
    sup_large_params,
    sup_multi_params,
)
from persuasion.service.equilibrium_service import EquilibriumService
from persuasion.service.multi_receiver_service import MultiReceiverService
from persuasion.service.region_service import RegionService
from persuasion.service.simplex_service import SimplexSolver


def _multi() -> MultiReceiverService:
    return MultiReceiverService(RegionService())


def _analysis() -> AnalysisService:
    regions = RegionService()
    return AnalysisService(
        BestResponseService(SimplexSolver()), EquilibriumService(regions), MultiReceiverService(regions)
    )


@pytest.mark.parametrize("rho", [0.2, 0.5, 0.8])
def test_two_receiver_scalars(rho):
    s = multi_scalars(UtilityFunction.two_receiver(rho))
    assert s.R == pytest.approx(rho - 0.5, abs=1e-15)
    assert s.S == pytest.approx(0.5 - rho, abs=1e-15)


@pytest.mark.parametrize("n", [2, 4, 6, 8])
def test_additive_utility_has_zero_scalars(n):
    s = multi_scalars(UtilityFunction.additive(n))
    assert s.R == pytest.approx(0.0, abs=1e-12)
    assert s.S == pytest.approx(0.0, abs=1e-12)


def test_odd_n_has_no_half_scalar():
    assert multi_scalars(UtilityFunction.power(3, 0.5)).S is None
    with pytest.raises(PreconditionError):
        multi_scalars(UtilityFunction.power(3, 0.5), require_half=True)


def test_sup_multi_reduces_to_two_receivers():
    multi = sup_multi_params(0.7, UtilityFunction.two_receiver(0.3))
    two = sup_large_params(0.7, 0.3)
    assert multi.mu == pytest.approx(two.mu_s, abs=1e-12)
    assert multi.alpha == pytest.approx(two.alpha, abs=1e-12)
    assert multi.p_hat == pytest.approx(two.p_hat, abs=1e-12)


def test_sub_multi_even_reduces_to_two_receivers():
    multi = sub_multi_even_params(0.6, UtilityFunction.two_receiver(0.6), 0.3)
    two = sub_large_params(0.6, 0.6, 0.3)
    for name in ("alpha", "beta", "ell", "p_hat"):
        assert getattr(multi, name) == pytest.approx(getattr(two, name), abs=1e-12)


def test_sup_multi_additive_mass():
    for n in (2, 3, 5):
        built = _multi().construct_sup_large_multi(Prior(lam=0.6), UtilityFunction.additive(n))
        assert built.params["mu"] == pytest.approx(1.0 / 3.0, abs=1e-12)
        assert built.all_conditions_hold()
        assert built.closed_form_welfare == pytest.approx(float(n))


@pytest.mark.parametrize("n", [2, 4, 6, 8])
def test_sub_multi_even_additive_layout(n):
    built = _multi().construct_sub_large_multi_even(Prior(lam=0.6), UtilityFunction.additive(n))
    p = built.record
    assert p.mu == pytest.approx(1.0 / 3.0, abs=1e-8)
    assert p.alpha == pytest.approx(1.0 / 1.2, abs=1e-7)
    assert p.ell == pytest.approx(0.4, abs=1e-7)
    assert p.p_hat == pytest.approx(0.8, abs=1e-7)
    assert p.beta == pytest.approx(0.0, abs=1e-7)
    assert built.all_conditions_hold(tol=1e-7)


@pytest.mark.parametrize("n", [2, 4, 6, 8])
def test_additive_price_of_stability_is_one(n):
    analysis = _analysis()
    u = UtilityFunction.additive(n)
    sup = analysis.pos_bound("sup-multi", Prior(lam=0.6), u)
    sub = analysis.pos_bound("sub-multi-even", Prior(lam=0.6), u)
    assert sup.closed_form_bound == pytest.approx(1.0, abs=1e-12)
    assert sub.closed_form_bound == pytest.approx(1.0, abs=1e-12)
    assert sub.ratio == pytest.approx(1.0, abs=1e-9)


def test_sub_multi_even_concave_utility():
    prior, u = Prior(lam=0.55), UtilityFunction.power(4, 0.5)
    interval = RegionService().sub_multi_feasible_interval(0.55, u)
    assert interval is not None
    built = _multi().construct_sub_large_multi_even(prior, u)
    assert built.record.mu == pytest.approx(interval.lower)
    assert built.all_conditions_hold()
    assert built.record.S < 0
    assert _analysis().pos_bound("sub-multi-even", prior, u).closed_form_bound >= 1.0


def test_sub_multi_odd_converges():
    params = _multi().solve_sub_multi_odd(Prior(lam=0.55), UtilityFunction.power(3, 0.5), mu1=0.15)
    assert params.converged
    assert params.residual_norm <= 1e-9
    assert params.mu2 == pytest.approx(0.15, abs=0.02)
    assert params.beta == pytest.approx(0.39, abs=0.02)


def test_sub_multi_odd_candidate_is_bayes_plausible():
    built = _multi().construct_sub_large_multi_odd(Prior(lam=0.55), UtilityFunction.power(3, 0.5), 0.15)
    assert built.family == "sub-multi-odd"
    assert abs(built.policy.marginal_means() - 0.55).max() <= 1e-9


def test_multi_receiver_preconditions():
    multi = _multi()
    with pytest.raises(PreconditionError):
        multi.construct_sup_large_multi(Prior(lam=0.4), UtilityFunction.power(3, 2.0))
    with pytest.raises(PreconditionError):
        multi.construct_sub_large_multi_even(Prior(lam=0.6), UtilityFunction.power(3, 0.5))
    with pytest.raises(PreconditionError):
        multi.solve_sub_multi_odd(Prior(lam=0.6), UtilityFunction.power(4, 0.5))
    with pytest.raises(PreconditionError):
        multi.construct_sup_large_multi(Prior(lam=0.7), UtilityFunction.power(3, 0.5))
