import numpy as np
import pytest

from persuasion.core.errors import PreconditionError
from persuasion.model.schemas import Atom, Prior, Segment, SignalingPolicy, UtilityFunction
from persuasion.service.payoff_service import (
    expected_payoff,
    mean_payoff,
    payoff_at_points,
    welfare,
    win_set_probability,
)
from persuasion.service.policy_service import full_disclosure_policy, null_policy


def _random_opponent(rng, n, atoms=4, levels=None):
    w = rng.dirichlet(np.ones(atoms))
    if levels is None:
        pts = rng.random((atoms, n))
    else:
        pts = rng.choice(levels, size=(atoms, n))
    return w, pts


def _random_monotone_utility(rng, n):
    return UtilityFunction.anonymous(np.concatenate([[0.0], np.cumsum(rng.random(n))]))


def test_payoff_against_null_policy():
    u = UtilityFunction.two_receiver(0.4)
    opponent = null_policy(Prior(lam=0.5), 2)
    assert expected_payoff((1.0, 1.0), opponent, u) == pytest.approx(1.0)
    # tie on both receivers: v(1)/2 + v(2)/4
    assert expected_payoff((0.5, 0.5), opponent, u) == pytest.approx(0.45)
    assert expected_payoff((0.5, 0.0), opponent, u) == pytest.approx(0.2)
    assert expected_payoff((0.0, 0.0), opponent, u) == 0.0


def test_win_set_probabilities_sum_to_one():
    rng = np.random.default_rng(7)
    for _ in range(1000):
        n = int(rng.integers(1, 4))
        w, pts = _random_opponent(rng, n, atoms=int(rng.integers(1, 5)), levels=[0.0, 0.5, 1.0])
        q = rng.choice([0.0, 0.25, 0.5, 1.0], size=n)
        total = sum(win_set_probability(q, s, (w, pts)) for s in range(1 << n))
        assert abs(total - 1.0) <= 1e-12


def test_payoff_equals_utility_weighted_win_sets():
    rng = np.random.default_rng(11)
    for _ in range(50):
        n = 3
        u = UtilityFunction.general(n, np.concatenate([[0.0], rng.random(7)]))
        w, pts = _random_opponent(rng, n, levels=[0.0, 0.5, 1.0])
        q = rng.choice([0.0, 0.5, 1.0], size=n)
        direct = sum(u.value(s) * win_set_probability(q, s, (w, pts)) for s in range(1 << n))
        assert expected_payoff(q, (w, pts), u) == pytest.approx(direct, abs=1e-12)


def test_payoff_is_monotone_in_each_coordinate():
    rng = np.random.default_rng(3)
    n = 3
    u = _random_monotone_utility(rng, n)
    w, pts = _random_opponent(rng, n, atoms=6)
    low = rng.random((1000, n))
    high = np.minimum(1.0, low + rng.random((1000, n)) * rng.integers(0, 2, size=(1000, n)))
    assert np.all(payoff_at_points(high, (w, pts), u) >= payoff_at_points(low, (w, pts), u) - 1e-12)


def test_anonymous_fast_path_matches_subset_table():
    rng = np.random.default_rng(5)
    levels = [0.0, 0.25, 0.5, 0.75, 1.0]
    for _ in range(200):
        n = int(rng.integers(1, 5))
        u = _random_monotone_utility(rng, n)
        w, pts = _random_opponent(rng, n, atoms=int(rng.integers(1, 6)), levels=levels)
        q = rng.choice(levels, size=(8, n))
        fast = payoff_at_points(q, (w, pts), u, anonymous_path=True)
        slow = payoff_at_points(q, (w, pts), u, anonymous_path=False)
        assert np.max(np.abs(fast - slow)) <= 1e-12


def test_anonymous_path_needs_anonymous_utility():
    u = UtilityFunction.general(1, [0.0, 1.0])
    with pytest.raises(PreconditionError):
        payoff_at_points(np.zeros((1, 1)), (np.ones(1), np.zeros((1, 1))), u, anonymous_path=True)


def test_dimension_mismatch_is_rejected():
    u = UtilityFunction.additive(2)
    with pytest.raises(PreconditionError):
        payoff_at_points(np.zeros((1, 3)), (np.ones(1), np.zeros((1, 2))), u)


def test_full_and_null_strategy_payoffs():
    prior, u = Prior(lam=0.3), UtilityFunction.anonymous([0.0, 0.4, 1.0])
    full, null = full_disclosure_policy(prior, 2), null_policy(prior, 2)
    assert mean_payoff(null, null, u) == pytest.approx(0.45)
    assert mean_payoff(full, null, u) == pytest.approx(0.3)
    assert mean_payoff(null, full, u) == pytest.approx(0.7)
    assert mean_payoff(full, full, u) == pytest.approx(0.471)


def test_welfare_of_diagonal_policy_approaches_v_n():
    u = UtilityFunction.power(2, 2.0)
    g = SignalingPolicy(n=2, segments=(Segment(weight=1.0, start=(0.0, 0.0), end=(0.6, 0.6)),))
    # discretized ties on the diagonal add O(1/K)
    assert welfare(g, g, u, K=512) == pytest.approx(4.0, abs=4.0 / 512)


def test_welfare_of_two_different_policies_sums_both_sides():
    u = UtilityFunction.anonymous([0.0, 0.4, 1.0])
    prior = Prior(lam=0.3)
    full, null = full_disclosure_policy(prior, 2), null_policy(prior, 2)
    assert welfare(full, null, u) == pytest.approx(0.3 + 0.7)
    g = SignalingPolicy(n=1, atoms=(Atom(weight=1.0, point=(0.3,)),))
    assert welfare(g, g, UtilityFunction.anonymous([0.0, 1.0])) == pytest.approx(1.0)
