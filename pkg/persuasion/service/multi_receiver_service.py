from __future__ import annotations

from typing import List, Optional, Tuple

from persuasion.core.errors import FeasibilityError, PersuasionError, PreconditionError
from persuasion.core.logging import get_logger
from persuasion.model.reports import EquilibriumConstruction
from persuasion.model.schemas import HyperplaneCertificate, Prior, SubMultiOddParams, UtilityFunction
from persuasion.service.closed_forms import (
    multi_scalars,
    solve_sub_multi_odd,
    sub_multi_even_conditions,
    sub_multi_even_params,
    sub_multi_even_welfare,
    sub_multi_odd_conditions,
    sup_multi_conditions,
    sup_multi_params,
    sup_multi_welfare,
)
from persuasion.service.equilibrium_service import assemble, bayes_rows, numeric_params, require_curvature
from persuasion.service.region_service import RegionService


logger = get_logger(__name__)


class MultiReceiverService:
    """Large-prior equilibria with n receivers and an anonymous utility v(|S|)."""

    def __init__(self, regions: RegionService, newton_max_iter: int = 200):
        self.regions = regions
        self.newton_max_iter = newton_max_iter

    def construct_sup_large_multi(self, prior: Prior, utility: UtilityFunction) -> EquilibriumConstruction:
        require_curvature(utility, "supermodular")
        params = sup_multi_params(prior.lam, utility)
        n, mu, ph = utility.n, params.mu, params.p_hat
        vn = utility.v(n)
        policy = assemble(n, [(1 - mu, (0.0,) * n, (ph,) * n), (mu, (1.0,) * n, (1.0,) * n)])
        logger.info("Constructed sup-multi equilibrium: n=%d mu=%.12g p_hat=%.12g", n, mu, ph)
        return EquilibriumConstruction(
            family="sup-multi",
            policy=policy,
            params=numeric_params(params),
            record=params,
            certificate=HyperplaneCertificate(alpha=(params.alpha,) * n, beta=0.0),
            closed_form_welfare=sup_multi_welfare(params, vn),
            conditions=sup_multi_conditions(params, vn) + bayes_rows(policy, prior),
        )

    def construct_sub_large_multi_even(
        self, prior: Prior, utility: UtilityFunction, mu: Optional[float] = None
    ) -> EquilibriumConstruction:
        require_curvature(utility, "submodular")
        n = utility.n
        if n % 2:
            raise PreconditionError(f"even-n family needs even n, got n={n}")
        scalars = multi_scalars(utility, require_half=True)
        if scalars.S > 1e-12:
            raise PreconditionError(f"S(n) = {scalars.S} > 0: utility is not submodular")
        interval = self.regions.sub_multi_feasible_interval(prior.lam, utility)
        if interval is None:
            logger.error("No admissible mass for lambda=%.6g, n=%d", prior.lam, n)
            raise FeasibilityError(f"the feasible interval I({prior.lam}, v, {n}) is empty")
        if mu is None:
            mu = interval.lower
        elif not interval.contains(mu):
            raise FeasibilityError(f"mu={mu} is outside I = [{interval.lower}, {interval.upper}]")

        params = sub_multi_even_params(prior.lam, utility, mu)
        h = n // 2
        ell, ph = params.ell, params.p_hat
        policy = assemble(
            n,
            [
                (mu, (0.0,) * h + (1.0,) * h, (ell,) * h + (1.0,) * h),
                (1 - 2 * mu, (ell,) * h + (ph,) * h, (ph,) * h + (ell,) * h),
                (mu, (1.0,) * h + (0.0,) * h, (1.0,) * h + (ell,) * h),
            ],
        )
        logger.info("Constructed sub-multi-even equilibrium: n=%d mu=%.12g ell=%.12g p_hat=%.12g", n, mu, ell, ph)
        return EquilibriumConstruction(
            family="sub-multi-even",
            policy=policy,
            params=numeric_params(params),
            record=params,
            certificate=HyperplaneCertificate(alpha=(params.alpha,) * n, beta=params.beta),
            closed_form_welfare=sub_multi_even_welfare(params, utility),
            conditions=sub_multi_even_conditions(params, utility) + bayes_rows(policy, prior),
        )

    def _even_seed(self, lam: float, utility: UtilityFunction, n: int) -> Optional[Tuple[float, float]]:
        """(mu, beta) of the smallest-mass even-n solution with the same v, if any."""
        if n < 2:
            return None
        values = utility.anonymous_values
        if n >= len(values):
            # Extend v by its last increment to reach n + 1 receivers.
            values = values + (values[-1] + (values[-1] - values[-2]),)
        even = UtilityFunction.anonymous(values[: n + 1])
        try:
            interval = self.regions.sub_multi_feasible_interval(lam, even)
        except PersuasionError:
            return None
        if interval is None:
            return None
        params = sub_multi_even_params(lam, even, interval.lower)
        return params.mu, params.beta

    def odd_seeds(self, lam: float, utility: UtilityFunction, mu1: float) -> List[Tuple[float, float]]:
        n = utility.n
        seeds = [s for s in (self._even_seed(lam, utility, n - 1), self._even_seed(lam, utility, n + 1)) if s]
        seeds.append((mu1, 0.5 * utility.v((n - 1) // 2)))
        return seeds

    def solve_sub_multi_odd(
        self, prior: Prior, utility: UtilityFunction, mu1: Optional[float] = None
    ) -> SubMultiOddParams:
        require_curvature(utility, "submodular")
        n = utility.n
        if n % 2 == 0 or n < 3:
            raise PreconditionError(f"odd-n family needs odd n >= 3, got n={n}")
        if mu1 is None:
            seed = self._even_seed(prior.lam, utility, n - 1) or self._even_seed(prior.lam, utility, n + 1)
            mu1 = seed[0] if seed else (2 * prior.lam - 1) / (2 * prior.lam)
        return solve_sub_multi_odd(
            prior.lam, utility, mu1, self.odd_seeds(prior.lam, utility, mu1), max_iter=self.newton_max_iter
        )

    def construct_sub_large_multi_odd(
        self, prior: Prior, utility: UtilityFunction, mu1: Optional[float] = None
    ) -> EquilibriumConstruction:
        """Best-effort three-piece layout; equilibrium status is left to the verifier."""
        params = self.solve_sub_multi_odd(prior, utility, mu1)
        n = utility.n
        A, B = (n + 1) // 2, (n - 1) // 2
        p = params
        mid = 1 - p.mu1 - p.mu2
        if mid < -1e-12 or min(p.ell1, p.ell2) < -1e-12 or max(p.p_hat1, p.p_hat2) > 1 + 1e-9:
            logger.error("Odd-n solution outside the admissible layout: %s", p)
            raise FeasibilityError(
                f"odd-n solution is not a valid layout (mu2={p.mu2:.6g}, p_hat=({p.p_hat1:.6g}, {p.p_hat2:.6g}))"
            )
        policy = assemble(
            n,
            [
                (p.mu1, (0.0,) * A + (1.0,) * B, (p.ell1,) * A + (1.0,) * B),
                (mid, (p.ell1,) * A + (p.p_hat2,) * B, (p.p_hat1,) * A + (p.ell2,) * B),
                (p.mu2, (1.0,) * A + (0.0,) * B, (1.0,) * A + (p.ell2,) * B),
            ],
        )
        logger.info(
            "Constructed sub-multi-odd candidate: n=%d mu1=%.6g mu2=%.6g residual=%.3g",
            n,
            p.mu1,
            p.mu2,
            p.residual_norm,
        )
        return EquilibriumConstruction(
            family="sub-multi-odd",
            policy=policy,
            params=numeric_params(params),
            record=params,
            certificate=HyperplaneCertificate(alpha=(p.alpha1,) * A + (p.alpha2,) * B, beta=p.beta),
            conditions=sub_multi_odd_conditions(params, utility) + bayes_rows(policy, prior),
        )
