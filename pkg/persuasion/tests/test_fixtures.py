import numpy as np
import pytest

from persuasion.core.errors import PreconditionError
from persuasion.model.schemas import Grid
from persuasion.service.analysis_service import AnalysisService
from persuasion.service.best_response_service import BestResponseService
from persuasion.service.equilibrium_service import EquilibriumService
from persuasion.service.multi_receiver_service import MultiReceiverService
from persuasion.service.region_service import RegionService
from persuasion.service.simplex_service import SimplexSolver


def _equilibria(pieces: int = 16) -> EquilibriumService:
    return EquilibriumService(RegionService(), fixture_pieces=pieces)


def _analysis() -> AnalysisService:
    regions = RegionService()
    return AnalysisService(
        BestResponseService(SimplexSolver()), EquilibriumService(regions), MultiReceiverService(regions)
    )


def test_ex42b_two_piece_curve():
    policy = _equilibria().example_fixture("ex42b")
    first, second = policy.segments
    assert first.weight == pytest.approx(87 / 237, abs=1e-15)
    assert second.weight == pytest.approx(2450 / 3871, abs=1e-15)
    assert first.end == pytest.approx((0.3, 227 / 790))
    assert second.start == first.end
    assert second.end == pytest.approx((0.79, 0.81), abs=1e-3)
    assert policy.marginal_means() == pytest.approx([0.4, 0.4], abs=1e-12)


@pytest.mark.parametrize("pieces", [1, 4, 16])
def test_ex43b_tiles_its_curve(pieces):
    policy = _equilibria(pieces).example_fixture("ex43b")
    segments = policy.segments
    assert len(segments) == 2 * pieces
    assert segments[0].start == pytest.approx((0.0, 0.3))
    assert segments[-1].end == pytest.approx((0.15, 0.0))
    for a, b in zip(segments[:-1], segments[1:]):
        assert a.end == b.start
    for s in segments:
        for q in (s.start, s.end):
            assert q[0] + q[1] / 2 == pytest.approx(0.15)
    assert sum(s.weight for s in segments) == pytest.approx(1.0, abs=1e-12)
    assert policy.marginal_means() == pytest.approx([0.1, 0.1], abs=1e-12)


def test_ex43b_piece_override():
    assert len(_equilibria(16).example_fixture("ex43b", pieces=3).segments) == 6
    with pytest.raises(PreconditionError):
        _equilibria().example_fixture("ex43b", pieces=0)


def test_ex31_parameter_and_certificate():
    fixture = _equilibria().example_instance("ex31(0.25)")
    (segment,) = fixture.policy.segments
    assert segment.start == (0.25, 0.75) and segment.end == (0.75, 0.25)
    assert fixture.prior.lam == 0.5
    assert fixture.certificate.alpha == (0.0, 0.0) and fixture.certificate.beta == 1.0
    default = _equilibria().example_instance("ex31")
    assert default.policy.segments[0].start == (0.0, 1.0)


@pytest.mark.parametrize("fixture_id", ["ex99", "ex31(0.7)", "ex42a(1)", "", "ex4"])
def test_bad_fixture_ids(fixture_id):
    with pytest.raises(PreconditionError):
        _equilibria().example_instance(fixture_id)


@pytest.mark.parametrize("fixture_id", ["ex31", "ex42a", "ex43a"])
def test_fixtures_verify_as_equilibria(fixture_id):
    fixture = _equilibria().example_instance(fixture_id)
    report = _analysis().verify_equilibrium(
        fixture.policy,
        fixture.prior,
        fixture.utility,
        Grid(n=2, points_per_axis=41),
        K=128,
        closed_form=fixture.certificate,
    )
    assert report.gap >= -1e-9
    assert report.is_equilibrium
    assert not report.red_alert


def test_fixture_instances_are_bayes_plausible():
    eq = _equilibria()
    for fixture_id in ("ex31", "ex42a", "ex42b", "ex43a", "ex43b"):
        fixture = eq.example_instance(fixture_id)
        assert eq.bayes_residual(fixture.policy, fixture.prior) <= 1e-12
        assert np.all(np.asarray(fixture.utility.anonymous_values) >= 0)
