"""Closed-form symmetric equilibria: small prior, two-receiver large prior,
independent signaling and the worked example fixtures."""

from __future__ import annotations

import re
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

from pydantic import BaseModel

from persuasion.core.errors import FeasibilityError, PreconditionError
from persuasion.core.logging import get_logger
from persuasion.model.reports import (
    ConditionCheck,
    EquilibriumConstruction,
    ExampleFixture,
    IndependentConstruction,
)
from persuasion.model.schemas import (
    Atom,
    HyperplaneCertificate,
    IndependentPolicy,
    Prior,
    Segment,
    SignalingPolicy,
    UtilityFunction,
)
from persuasion.service.closed_forms import (
    is_half,
    sub_large_conditions,
    sub_large_params,
    sub_large_welfare,
    sup_large_conditions,
    sup_large_params,
    sup_large_welfare,
)
from persuasion.service.policy_service import check_bayes_plausible
from persuasion.service.region_service import RegionService


logger = get_logger(__name__)

EPSILON = 0.01
EXAMPLE_IDS = ("ex31", "ex42a", "ex42b", "ex43a", "ex43b")


def numeric_params(record: BaseModel) -> Dict[str, float]:
    return {
        k: float(v)
        for k, v in record.model_dump().items()
        if isinstance(v, (int, float, bool))
    }


def bayes_rows(policy: SignalingPolicy, prior: Prior) -> Tuple[ConditionCheck, ...]:
    means = policy.marginal_means()
    return tuple(
        ConditionCheck.equality(f"bayes receiver {j + 1}", float(m), prior.lam) for j, m in enumerate(means)
    )


Piece = Tuple[float, Sequence[float], Sequence[float]]


def piece(weight: float, start: Sequence[float], end: Sequence[float]) -> Atom | Segment:
    """Uniform segment, or a point mass when the segment degenerates."""
    start = tuple(float(x) for x in start)
    end = tuple(float(x) for x in end)
    if max(abs(a - b) for a, b in zip(start, end)) <= 1e-12:
        return Atom(weight=weight, point=start)
    return Segment(weight=weight, start=start, end=end)


def assemble(n: int, pieces: List[Piece]) -> SignalingPolicy:
    """Policy from (weight, start, end) pieces; pieces below the weight floor are dropped."""
    kept = [piece(w, a, b) for w, a, b in pieces if w >= 1e-12]
    atoms = tuple(p for p in kept if isinstance(p, Atom))
    segments = tuple(p for p in kept if isinstance(p, Segment))
    return SignalingPolicy(n=n, atoms=atoms, segments=segments)


def require_curvature(utility: UtilityFunction, kind: str) -> None:
    """Weak super/submodularity is required; only a warning when it is not strict."""
    if not utility.is_anonymous:
        raise PreconditionError(f"{kind} family needs an anonymous utility")
    if utility.n < 2:
        return
    check = utility.is_supermodular if kind == "supermodular" else utility.is_submodular
    if not check(strict=False):
        raise PreconditionError(f"utility {utility.anonymous_values} is not {kind}")
    if not check(strict=True):
        logger.warning("Utility %s is only weakly %s", utility.anonymous_values, kind)


class EquilibriumService:
    def __init__(self, regions: RegionService, fixture_pieces: int = 16):
        self.regions = regions
        self.fixture_pieces = fixture_pieces

    # Small prior

    def construct_sup_small(self, prior: Prior, utility: UtilityFunction) -> EquilibriumConstruction:
        """Perfectly correlated uniform diagonal 0 -> 2 lambda 1."""
        lam, n = prior.lam, utility.n
        if lam > 0.5:
            raise PreconditionError(f"small-prior family needs lambda <= 1/2, got {lam}")
        require_curvature(utility, "supermodular")
        vn = utility.v(n)
        policy = SignalingPolicy(
            n=n, segments=(Segment(weight=1.0, start=(0.0,) * n, end=(2 * lam,) * n),)
        )
        logger.info("Constructed sup-small equilibrium at lambda=%.6g, n=%d", lam, n)
        return EquilibriumConstruction(
            family="sup-small",
            policy=policy,
            params={"lam": lam, "n": float(n)},
            certificate=HyperplaneCertificate(alpha=(vn / (2 * lam * n),) * n, beta=0.0),
            closed_form_welfare=vn,
            conditions=bayes_rows(policy, prior),
        )

    def construct_sub_small(self, prior: Prior, utility: UtilityFunction) -> EquilibriumConstruction:
        """Split-half anti-diagonal: the first floor(n/2) coordinates ascend, the rest descend."""
        lam, n = prior.lam, utility.n
        if lam > 0.5:
            raise PreconditionError(f"small-prior family needs lambda <= 1/2, got {lam}")
        if n < 2:
            raise PreconditionError("submodular family needs n >= 2")
        require_curvature(utility, "submodular")
        up, down = n // 2, n - n // 2
        top = 2 * lam
        policy = SignalingPolicy(
            n=n,
            segments=(
                Segment(weight=1.0, start=(0.0,) * up + (top,) * down, end=(top,) * up + (0.0,) * down),
            ),
        )
        # On the support the payoff is v(up) per unit of ascent and v(down) per unit of descent.
        alpha = (utility.v(up) / (top * up),) * up + (utility.v(down) / (top * down),) * down
        logger.info("Constructed sub-small equilibrium at lambda=%.6g, n=%d", lam, n)
        return EquilibriumConstruction(
            family="sub-small",
            policy=policy,
            params={"lam": lam, "n": float(n)},
            certificate=HyperplaneCertificate(alpha=alpha, beta=0.0),
            closed_form_welfare=utility.v(up) + utility.v(down),
            conditions=bayes_rows(policy, prior),
        )

    # Large prior, two receivers

    def construct_sup_large(self, prior: Prior, rho: float, r: float = 1.0) -> EquilibriumConstruction:
        params = sup_large_params(prior.lam, rho, r)
        if not 0.0 <= params.mu_s <= 1.0 or not 0.0 < params.p_hat <= 1.0 + 1e-12:
            logger.error("sup-large parameters out of range: %s", params)
            raise PreconditionError(f"parameters out of range: mu={params.mu_s}, p_hat={params.p_hat}")
        if is_half(rho):
            logger.warning("rho = 1/2 makes the utility additive, not strictly supermodular")
        mu, ph = params.mu_s, params.p_hat
        policy = assemble(2, [(1 - mu, (0.0, 0.0), (ph, ph)), (mu, (1.0, 1.0), (1.0, 1.0))])
        conditions = sup_large_conditions(params) + bayes_rows(policy, prior)
        logger.info("Constructed sup-large equilibrium: mu=%.12g, alpha=%.12g, p_hat=%.12g", mu, params.alpha, ph)
        return EquilibriumConstruction(
            family="sup-large",
            policy=policy,
            params=numeric_params(params),
            record=params,
            certificate=HyperplaneCertificate(alpha=(params.alpha, params.alpha), beta=params.beta),
            closed_form_welfare=sup_large_welfare(params),
            conditions=conditions,
        )

    def construct_sub_large(
        self, prior: Prior, rho: float, mu: Optional[float] = None, r: float = 1.0
    ) -> EquilibriumConstruction:
        """Three-piece layout; mu defaults to the smallest admissible mass."""
        lam = prior.lam
        if lam <= 0.5:
            raise PreconditionError(f"large-prior family needs lambda > 1/2, got {lam}")
        interval = self.regions.sub_feasible_interval(lam, rho, r)
        if interval is None:
            logger.error("No admissible mass for lambda=%.6g, rho=%.6g", lam, rho)
            raise FeasibilityError(f"rho={rho} is outside C({lam}): the feasible interval is empty")
        if mu is None:
            mu = interval.lower
        elif not interval.contains(mu):
            logger.error("mu=%.6g outside I=[%.6g, %.6g]", mu, interval.lower, interval.upper)
            raise FeasibilityError(f"mu={mu} is outside I({lam},{rho}) = [{interval.lower}, {interval.upper}]")

        params = sub_large_params(lam, rho, mu, r)
        ell, ph = params.ell, params.p_hat
        policy = assemble(
            2,
            [
                (mu, (1.0, 0.0), (1.0, ell)),
                (1 - 2 * mu, (ell, ph), (ph, ell)),
                (mu, (0.0, 1.0), (ell, 1.0)),
            ],
        )
        conditions = sub_large_conditions(params) + bayes_rows(policy, prior)
        logger.info("Constructed sub-large equilibrium: mu=%.12g, ell=%.12g, p_hat=%.12g", mu, ell, ph)
        return EquilibriumConstruction(
            family="sub-large",
            policy=policy,
            params=numeric_params(params),
            record=params,
            certificate=HyperplaneCertificate(alpha=(params.alpha, params.alpha), beta=params.beta),
            closed_form_welfare=sub_large_welfare(params),
            conditions=conditions,
        )

    # Independent signaling

    @staticmethod
    def independent_policy(prior: Prior, n: int) -> IndependentPolicy:
        """The single-receiver equilibrium marginal, drawn independently for each receiver."""
        lam = prior.lam
        if lam <= 0.5:
            marginal = SignalingPolicy(n=1, segments=(Segment(weight=1.0, start=(0.0,), end=(2 * lam,)),))
        else:
            marginal = SignalingPolicy(
                n=1,
                atoms=(Atom(weight=(2 * lam - 1) / lam, point=(1.0,)),),
                segments=(Segment(weight=(1 - lam) / lam, start=(0.0,), end=(2 - 2 * lam,)),),
            )
        return IndependentPolicy(marginals=(marginal,) * n)

    def construct_independent_additive(self, prior: Prior, utility: UtilityFunction) -> IndependentConstruction:
        if not utility.is_additive():
            raise PreconditionError("independent signaling is an equilibrium only for additive utilities")
        n = utility.n
        return IndependentConstruction(
            policy=self.independent_policy(prior, n),
            closed_form_welfare=utility.value((1 << n) - 1),
            marginal_payoff=0.5 * utility.value(1),
        )

    # Worked examples

    def example_fixture(self, fixture_id: str, pieces: Optional[int] = None) -> SignalingPolicy:
        return self.example_instance(fixture_id, pieces).policy

    def example_instance(self, fixture_id: str, pieces: Optional[int] = None) -> ExampleFixture:
        """Resolve ``ex31``, ``ex31(c)``, ``ex42a``, ``ex42b``, ``ex43a`` or ``ex43b``."""
        match = re.fullmatch(r"\s*(ex\d\d[ab]?)\s*(?:\(\s*([^)]*)\s*\))?\s*", fixture_id)
        if match is None or match.group(1) not in EXAMPLE_IDS:
            raise PreconditionError(f"unknown example id {fixture_id!r}; expected one of {', '.join(EXAMPLE_IDS)}")
        name, arg = match.groups()
        if arg and name != "ex31":
            raise PreconditionError(f"example {name} takes no parameter")

        if name == "ex31":
            c = float(arg) if arg else 0.5
            if not 0.0 < c <= 0.5:
                raise PreconditionError(f"ex31 needs c in (0, 1/2], got {c}")
            policy = SignalingPolicy(
                n=2, segments=(Segment(weight=1.0, start=(0.5 - c, 0.5 + c), end=(0.5 + c, 0.5 - c)),)
            )
            return ExampleFixture(
                id=f"ex31({c:g})",
                policy=policy,
                prior=Prior(lam=0.5),
                utility=UtilityFunction.constant(2),
                certificate=HyperplaneCertificate(alpha=(0.0, 0.0), beta=1.0),
            )
        if name == "ex42a":
            prior = Prior(lam=0.4)
            return ExampleFixture(
                id=name,
                policy=SignalingPolicy(n=2, segments=(Segment(weight=1.0, start=(0.0, 0.0), end=(0.8, 0.8)),)),
                prior=prior,
                utility=UtilityFunction.anonymous([0.0, EPSILON, 1.0]),
            )
        if name == "ex42b":
            return ExampleFixture(
                id=name,
                policy=self._ex42b(),
                prior=Prior(lam=0.4),
                utility=UtilityFunction.anonymous([0.0, EPSILON, 1.0]),
            )
        if name == "ex43a":
            return ExampleFixture(
                id=name,
                policy=SignalingPolicy(n=2, segments=(Segment(weight=1.0, start=(0.0, 0.2), end=(0.2, 0.0)),)),
                prior=Prior(lam=0.1),
                utility=UtilityFunction.anonymous([0.0, 1.0, 1.0 + EPSILON]),
            )
        return ExampleFixture(
            id=name,
            policy=self._ex43b(0.1, pieces or self.fixture_pieces),
            prior=Prior(lam=0.1),
            utility=UtilityFunction.anonymous([0.0, 1.0, 1.0 + EPSILON]),
        )

    @staticmethod
    def _ex42b() -> SignalingPolicy:
        """Two-piece curve q2 = 227/237 q1 up to the breakpoint (3/10, 227/790), then slope 4129/3871."""
        knee = (Fraction(3, 10), Fraction(227, 790))
        end_q1 = Fraction(79, 100)
        end = (end_q1, knee[1] + Fraction(4129, 3871) * (end_q1 - knee[0]))
        first = Fraction(290, 237) * knee[0]
        second = Fraction(5000, 3871) * (end_q1 - knee[0])
        return SignalingPolicy(
            n=2,
            segments=(
                Segment(weight=float(first), start=(0.0, 0.0), end=tuple(float(x) for x in knee)),
                Segment(weight=float(second), start=tuple(float(x) for x in knee), end=tuple(float(x) for x in end)),
            ),
        )

    @staticmethod
    def _ex43b(lam: float, pieces: int) -> SignalingPolicy:
        """Density 8 q1 / (9 lambda^2) along q1 + q2/2 = 3 lambda / 2, piecewise uniform.

        The q1 range is cut into ``pieces`` cells. Each cell is split at its exact
        conditional mean c into two uniform segments weighted so that the cell keeps
        its exact mass and mean; the segments tile the curve without gaps.
        """
        if pieces < 1:
            raise PreconditionError("ex43b needs at least one piece")
        top = 1.5 * lam
        edges = [top * i / pieces for i in range(pieces + 1)]
        parts: List[Tuple[float, float, float]] = []
        for lo, hi in zip(edges[:-1], edges[1:]):
            mass = 4 * (hi * hi - lo * lo) / (9 * lam * lam)
            c = (2.0 / 3.0) * (hi**3 - lo**3) / (hi * hi - lo * lo)
            parts.append((mass * (hi - c) / (hi - lo), lo, c))
            parts.append((mass * (c - lo) / (hi - lo), c, hi))
        scale = 1.0 / sum(w for w, _, _ in parts)
        return SignalingPolicy(
            n=2,
            segments=tuple(
                Segment(weight=w * scale, start=(a, 3 * lam - 2 * a), end=(b, 3 * lam - 2 * b))
                for w, a, b in parts
            ),
        )

    def bayes_residual(self, policy: SignalingPolicy, prior: Prior) -> float:
        return float(abs(check_bayes_plausible(policy, prior)).max())
