import numpy as np
import pytest
from pydantic import ValidationError

from persuasion.model.schemas import (
    Atom,
    Grid,
    HyperplaneCertificate,
    IndependentPolicy,
    Prior,
    Segment,
    SignalingPolicy,
    UtilityFunction,
)


def test_prior_must_lie_strictly_inside_unit_interval():
    assert Prior(lam=0.3).lam == 0.3
    for bad in (0.0, 1.0, -0.2, 1.5):
        with pytest.raises(ValidationError):
            Prior(lam=bad)


def test_anonymous_utility_dimension_mismatch_is_rejected():
    with pytest.raises(ValidationError):
        UtilityFunction(n=3, kind="anonymous", anonymous_values=(0.0, 1.0, 2.0))


def test_general_utility_from_dict_needs_every_subset():
    with pytest.raises(ValueError):
        UtilityFunction.general(2, {0: 0.0, 1: 1.0, 3: 2.0})
    u = UtilityFunction.general(2, {0: 0.0, 1: 1.0, 2: 0.5, 3: 2.0})
    assert u.value(0b10) == 0.5
    assert u.vmax == 2.0


def test_anonymous_table_counts_bits():
    u = UtilityFunction.anonymous([0.0, 1.0, 3.0, 4.0])
    table = u.table()
    assert table.shape == (8,)
    assert table[0b101] == 3.0
    assert table[0b111] == 4.0
    assert u.value(0b010) == 1.0


def test_curvature_classes():
    assert UtilityFunction.power(4, 2.0).is_supermodular()
    assert UtilityFunction.power(4, 0.5).is_submodular()
    additive = UtilityFunction.additive(3)
    assert additive.is_additive()
    assert not additive.is_supermodular(strict=True)
    assert additive.is_supermodular(strict=False)
    assert additive.is_submodular(strict=False)
    assert UtilityFunction.two_receiver(0.3).anonymous_values == (0.0, 0.3, 1.0)


def test_power_utility_needs_positive_exponent():
    with pytest.raises(ValueError):
        UtilityFunction.power(3, 0.0)


def test_policy_weights_must_sum_to_one():
    with pytest.raises(ValidationError):
        SignalingPolicy(n=1, atoms=(Atom(weight=0.5, point=(0.2,)),))
    with pytest.raises(ValidationError):
        SignalingPolicy(n=1)


def test_policy_rejects_mixed_dimensions_and_out_of_range_points():
    with pytest.raises(ValidationError):
        SignalingPolicy(
            n=2,
            atoms=(Atom(weight=0.5, point=(0.2, 0.2)), Atom(weight=0.5, point=(0.2,))),
        )
    with pytest.raises(ValidationError):
        Atom(weight=1.0, point=(1.2,))
    with pytest.raises(ValidationError):
        Atom(weight=0.0, point=(0.5,))


def test_segment_endpoints_must_differ():
    with pytest.raises(ValidationError):
        Segment(weight=1.0, start=(0.1, 0.1), end=(0.1, 0.1))
    seg = Segment(weight=1.0, start=(0.0, 0.4), end=(0.4, 0.0))
    assert seg.midpoint == pytest.approx((0.2, 0.2))
    assert seg.point_at(0.25) == pytest.approx((0.1, 0.3))


def test_marginal_means_mix_atoms_and_segments():
    policy = SignalingPolicy(
        n=2,
        atoms=(Atom(weight=0.5, point=(1.0, 1.0)),),
        segments=(Segment(weight=0.5, start=(0.0, 0.0), end=(0.5, 0.5)),),
    )
    assert policy.marginal_means() == pytest.approx([0.625, 0.625])
    assert not policy.is_atomic
    with pytest.raises(ValueError):
        policy.atom_arrays()


def test_from_arrays_roundtrips_atoms():
    points = np.array([[0.0, 1.0], [0.5, 0.25]])
    policy = SignalingPolicy.from_arrays([0.25, 0.75], points)
    w, p = policy.atom_arrays()
    assert w == pytest.approx([0.25, 0.75])
    assert np.allclose(p, points)


def test_policies_are_hashable_and_compare_by_value():
    a = SignalingPolicy(n=1, atoms=(Atom(weight=1.0, point=(0.3,)),))
    b = SignalingPolicy(n=1, atoms=(Atom(weight=1.0, point=(0.3,)),))
    assert a == b
    assert hash(a) == hash(b)


def test_grid_points_cover_the_cube():
    grid = Grid(n=2, points_per_axis=3)
    pts = grid.points()
    assert pts.shape == (9, 2)
    assert grid.step == 0.5
    assert {tuple(p) for p in pts} == {(x, y) for x in (0.0, 0.5, 1.0) for y in (0.0, 0.5, 1.0)}


def test_certificate_evaluation_and_sign():
    cert = HyperplaneCertificate(alpha=(1.0, 2.0), beta=0.5)
    assert cert.evaluate(np.array([[1.0, 1.0], [0.0, 0.5]])) == pytest.approx([3.5, 1.5])
    assert cert.alpha_min == 1.0
    assert cert.is_nonnegative()
    assert not HyperplaneCertificate(alpha=(-0.1,), beta=0.0).is_nonnegative()


def test_independent_policy_needs_one_dimensional_marginals():
    m = SignalingPolicy(n=1, atoms=(Atom(weight=1.0, point=(0.4,)),))
    assert IndependentPolicy(marginals=(m, m)).n == 2
    two_d = SignalingPolicy(n=2, atoms=(Atom(weight=1.0, point=(0.4, 0.4)),))
    with pytest.raises(ValidationError):
        IndependentPolicy(marginals=(two_d,))
