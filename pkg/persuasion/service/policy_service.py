from __future__ import annotations

from functools import lru_cache
from typing import List, Tuple

import numpy as np

from persuasion.core.errors import PreconditionError
from persuasion.core.logging import get_logger
from persuasion.model.reports import UtilityReport, UtilityViolation
from persuasion.model.schemas import (
    MIN_WEIGHT,
    Atom,
    IndependentPolicy,
    Prior,
    SignalingPolicy,
    UtilityFunction,
)


logger = get_logger(__name__)


def validate_utility(utility: UtilityFunction) -> UtilityReport:
    """List violated utility invariants, each with a witnessing pair of subsets."""
    n = utility.n
    violations: List[UtilityViolation] = []
    strictly_monotone = True

    if utility.is_anonymous:
        v = np.asarray(utility.anonymous_values, dtype=float)
        if v[0] != 0.0:
            violations.append(UtilityViolation(property="normalization", subset=0, detail=f"V(empty)={v[0]}"))
        steps = np.diff(v)
        for k in np.flatnonzero(steps < 0):
            violations.append(
                UtilityViolation(
                    property="monotonicity",
                    subset=(1 << int(k)) - 1,
                    superset=(1 << int(k + 1)) - 1,
                    detail=f"v({k})={v[k]} > v({k + 1})={v[k + 1]}",
                )
            )
        if not np.any(steps > 0):
            violations.extend(
                UtilityViolation(property="non_degeneracy", subset=1 << j, detail="no strict gain for receiver")
                for j in range(n)
            )
        strictly_monotone = bool(np.all(steps > 0))
        return UtilityReport(
            violations=tuple(violations),
            strictly_monotone=strictly_monotone,
            supermodular=utility.is_supermodular(strict=False),
            submodular=utility.is_submodular(strict=False),
            strictly_supermodular=utility.is_supermodular(strict=True),
            strictly_submodular=utility.is_submodular(strict=True),
        )

    table = utility.table()
    if table[0] != 0.0:
        violations.append(UtilityViolation(property="normalization", subset=0, detail=f"V(empty)={table[0]}"))
    masks = np.arange(1 << n)
    for j in range(n):
        bit = 1 << j
        base = masks[(masks & bit) == 0]
        gain = table[base | bit] - table[base]
        for m in base[gain < 0]:
            violations.append(
                UtilityViolation(
                    property="monotonicity",
                    subset=int(m),
                    superset=int(m | bit),
                    detail=f"V({int(m)})={table[m]} > V({int(m | bit)})={table[m | bit]}",
                )
            )
        if not np.any(gain > 0):
            violations.append(UtilityViolation(property="non_degeneracy", subset=bit, detail="no strict gain for receiver"))
        if np.any(gain <= 0):
            strictly_monotone = False
    return UtilityReport(violations=tuple(violations), strictly_monotone=strictly_monotone)


def check_bayes_plausible(policy: SignalingPolicy, prior: Prior) -> np.ndarray:
    """Marginal mean minus the prior, per receiver."""
    return policy.marginal_means() - prior.lam


@lru_cache(maxsize=64)
def discretize_arrays(policy: SignalingPolicy, K: int) -> Tuple[np.ndarray, np.ndarray]:
    """Atom weights and points after replacing each segment by K midpoint atoms."""
    if K < 1:
        raise PreconditionError(f"K must be >= 1, got {K}")
    weights = [np.array([a.weight for a in policy.atoms], dtype=float)]
    points = [np.array([a.point for a in policy.atoms], dtype=float).reshape(-1, policy.n)]
    for seg in policy.segments:
        k = K if seg.weight / K >= MIN_WEIGHT else max(1, int(seg.weight / MIN_WEIGHT))
        if k < K:
            logger.debug("Segment of weight %.3g gets %d atoms instead of K=%d", seg.weight, k, K)
        a = np.asarray(seg.start)
        b = np.asarray(seg.end)
        t = (np.arange(k) + 0.5) / k
        points.append(a + t[:, None] * (b - a))
        weights.append(np.full(k, seg.weight / k))
    w = np.concatenate(weights)
    p = np.clip(np.concatenate(points), 0.0, 1.0)
    w.setflags(write=False)
    p.setflags(write=False)
    return w, p


def discretize_policy(policy: SignalingPolicy, K: int) -> SignalingPolicy:
    if policy.is_atomic:
        return policy
    w, p = discretize_arrays(policy, K)
    return SignalingPolicy.from_arrays(w, p)


def full_disclosure_policy(prior: Prior, n: int) -> SignalingPolicy:
    """Quality revealed to every receiver: posterior 1 w.p. lambda, else 0."""
    return SignalingPolicy(
        n=n,
        atoms=(
            Atom(weight=prior.lam, point=(1.0,) * n),
            Atom(weight=1.0 - prior.lam, point=(0.0,) * n),
        ),
    )


def null_policy(prior: Prior, n: int) -> SignalingPolicy:
    return SignalingPolicy(n=n, atoms=(Atom(weight=1.0, point=(prior.lam,) * n),))


def product_arrays(independent: IndependentPolicy, K: int) -> Tuple[np.ndarray, np.ndarray]:
    """Joint atoms of the product of discretized marginals."""
    weights = np.ones(1)
    points = np.zeros((1, 0))
    for marginal in independent.marginals:
        w, x = discretize_arrays(marginal, K)
        weights = np.outer(weights, w).ravel()
        points = np.concatenate(
            [np.repeat(points, len(w), axis=0), np.tile(x, (len(points), 1))], axis=1
        )
    return weights, points


def product_policy(independent: IndependentPolicy, K: int) -> SignalingPolicy:
    w, p = product_arrays(independent, K)
    keep = w >= MIN_WEIGHT
    if not np.all(keep):
        # Light atoms merge at their barycenter into the nearest kept atom; means are unchanged.
        dropped_w, dropped_p = w[~keep], p[~keep]
        mass = dropped_w.sum()
        center = dropped_w @ dropped_p / mass
        w, p = w[keep].copy(), p[keep].copy()
        i = int(np.argmin(np.linalg.norm(p - center, axis=1)))
        p[i] = (w[i] * p[i] + mass * center) / (w[i] + mass)
        w[i] += mass
        logger.debug("Merged %d product atoms below the weight floor (mass %.3g)", int((~keep).sum()), mass)
    return SignalingPolicy.from_arrays(w, p)
