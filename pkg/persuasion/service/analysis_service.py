from __future__ import annotations

from typing import List, Optional, Tuple

import numpy as np

from persuasion.core.errors import FeasibilityError, PreconditionError
from persuasion.core.logging import get_logger
from persuasion.model.reports import (
    DiagnosticFlag,
    EquilibriumConstruction,
    EquilibriumReport,
    IntroGameTable,
    OptimalWelfare,
    PoSResult,
    StructuralDiagnostics,
)
from persuasion.model.schemas import (
    Grid,
    HyperplaneCertificate,
    Prior,
    SignalingPolicy,
    UtilityFunction,
)
from persuasion.service.best_response_service import BestResponseService, grid_payoffs
from persuasion.service.equilibrium_service import EquilibriumService
from persuasion.service.multi_receiver_service import MultiReceiverService
from persuasion.service.payoff_service import mean_payoff, payoff_at_points, welfare
from persuasion.service.policy_service import (
    discretize_arrays,
    full_disclosure_policy,
    null_policy,
    validate_utility,
)


logger = get_logger(__name__)

FAMILIES = (
    "sup-small",
    "sub-small",
    "sup-large",
    "sub-large",
    "sup-multi",
    "sub-multi-even",
    "sub-multi-odd",
    "independent",
)

_SMALL_PRIOR = {
    "sup-small": "sup-small",
    "sup-large": "sup-small",
    "sup-multi": "sup-small",
    "sub-small": "sub-small",
    "sub-large": "sub-small",
    "sub-multi-even": "sub-small",
    "sub-multi-odd": "sub-small",
}


def optimal_welfare(utility: UtilityFunction, exhaustive: bool = False) -> OptimalWelfare:
    """max over splits S of V(S) + V([n] minus S), with the first maximizing split."""
    n = utility.n
    if utility.is_anonymous and not exhaustive:
        v = utility.anonymous_values
        totals = [v[k] + v[n - k] for k in range(n + 1)]
        k = int(np.argmax(totals))
        return OptimalWelfare(value=float(totals[k]), split=(1 << k) - 1)
    table = utility.table()
    masks = np.arange(1 << n)
    totals = table[masks] + table[((1 << n) - 1) ^ masks]
    best = int(np.argmax(totals))
    return OptimalWelfare(value=float(totals[best]), split=best)


def verification_tolerance(grid: Grid, K: int, vmax: float, c1: float = 2.0, c2: float = 2.0) -> float:
    return c1 * grid.step * vmax + c2 * vmax / K


def structural_diagnostics(policy: SignalingPolicy, utility: UtilityFunction) -> StructuralDiagnostics:
    """Necessary-condition screens on the symbolic support of a candidate equilibrium."""
    n = policy.n
    interior = [a.point for a in policy.atoms if max(abs(x - 1.0) for x in a.point) > 1e-12]
    flags = [
        DiagnosticFlag(
            name="interior_atom_present",
            raised=bool(interior),
            condition="no point mass except possibly at the all-ones posterior",
            detail=f"atoms at {interior[:3]}" if interior else "",
        )
    ]

    strict = validate_utility(utility).strictly_monotone
    if not strict:
        reason = "utility is not strictly monotone; the marginal conditions do not apply"
        flags.append(DiagnosticFlag(name="marginal_atom_below_one", raised=None, condition=reason))
        flags.append(DiagnosticFlag(name="marginal_support_gap", raised=None, condition=reason))
        return StructuralDiagnostics(flags=tuple(flags))

    low_atoms: List[Tuple[int, float]] = []
    gaps: List[int] = []
    for j in range(n):
        intervals = []
        for a in policy.atoms:
            x = a.point[j]
            if x < 1.0 - 1e-12:
                low_atoms.append((j, x))
                intervals.append((x, x))
        for s in policy.segments:
            lo, hi = sorted((s.start[j], s.end[j]))
            if hi - lo <= 1e-12:
                if lo < 1.0 - 1e-12:
                    low_atoms.append((j, lo))
                    intervals.append((lo, lo))
                continue
            intervals.append((lo, hi))
        if not _single_interval_from_zero(intervals):
            gaps.append(j)

    flags.append(
        DiagnosticFlag(
            name="marginal_atom_below_one",
            raised=bool(low_atoms),
            condition="no marginal point mass below posterior 1",
            detail=f"(receiver, posterior) {low_atoms[:3]}" if low_atoms else "",
        )
    )
    flags.append(
        DiagnosticFlag(
            name="marginal_support_gap",
            raised=bool(gaps),
            condition="each marginal support is a single interval [0, q_hat] plus possibly {1}",
            detail=f"receivers {[j + 1 for j in gaps]}" if gaps else "",
        )
    )
    return StructuralDiagnostics(flags=tuple(flags))


def _single_interval_from_zero(intervals: List[Tuple[float, float]], tol: float = 1e-9) -> bool:
    # The point 1 on its own is allowed
    pieces = sorted((lo, hi) for lo, hi in intervals if lo < 1.0 - 1e-12)
    if not pieces:
        return True
    if pieces[0][0] > tol:
        return False
    reach = pieces[0][1]
    for lo, hi in pieces[1:]:
        if lo > reach + tol:
            return False
        reach = max(reach, hi)
    return True


class AnalysisService:
    def __init__(
        self,
        best_response: BestResponseService,
        equilibria: EquilibriumService,
        multi: MultiReceiverService,
        c1: float = 2.0,
        c2: float = 2.0,
        default_K: int = 512,
    ):
        self.best_response = best_response
        self.equilibria = equilibria
        self.multi = multi
        self.c1 = c1
        self.c2 = c2
        self.default_K = default_K

    @property
    def tie_tol(self) -> float:
        return self.best_response.tie_tol

    # Verification

    def verify_equilibrium(
        self,
        policy: SignalingPolicy,
        prior: Prior,
        utility: UtilityFunction,
        grid: Grid,
        K: int,
        closed_form: Optional[HyperplaneCertificate] = None,
    ) -> EquilibriumReport:
        """Best-response gap of G against itself, with certificate and structural checks."""
        residual = np.abs(policy.marginal_means() - prior.lam).max()
        if residual > 1e-9:
            raise PreconditionError(f"policy is not Bayes-plausible (marginal residual {residual:.3g})")
        weights, atoms = discretize_arrays(policy, K)
        own = payoff_at_points(atoms, (weights, atoms), utility, self.tie_tol)
        payoff_self = float(weights @ own)

        br = self.best_response.best_response(policy, prior, utility, grid, K, extra_points=atoms)
        gap = br.value - payoff_self
        tol = verification_tolerance(grid, K, utility.vmax, self.c1, self.c2)
        if gap < -1e-9:
            logger.warning("Negative best-response gap %.3g: LP optimum below a feasible policy", gap)

        support_slack = float(np.abs(own - br.certificate.evaluate(atoms)).max())

        closed_env = disagreement = None
        red_alert = False
        if closed_form is not None:
            grid_values = np.asarray(grid_payoffs(policy, utility, grid, K, self.tie_tol))
            closed_env = float(
                max(
                    (grid_values - closed_form.evaluate(grid.points())).max(),
                    (own - closed_form.evaluate(atoms)).max(),
                )
            )
            disagreement = max(0.0, closed_env)
            red_alert = disagreement > tol
            if red_alert:
                logger.warning(
                    "RED ALERT: closed-form certificate exceeded by %.3g (tolerance %.3g)", disagreement, tol
                )

        report = EquilibriumReport(
            payoff_vs_self=payoff_self,
            best_response_value=br.value,
            gap=gap,
            tolerance=tol,
            is_equilibrium=gap <= tol,
            certificate=br.certificate,
            max_envelope_violation=br.envelope_violation,
            support_slack=support_slack,
            closed_form_envelope_violation=closed_env,
            certificate_disagreement=disagreement,
            red_alert=red_alert,
            diagnostics=structural_diagnostics(policy, utility),
            grid_points_per_axis=grid.points_per_axis,
            K=K,
            atoms=len(weights),
        )
        logger.info("Verified policy: gap=%.6g tol=%.6g equilibrium=%s", gap, tol, report.is_equilibrium)
        return report

    def verify_construction(
        self, construction: EquilibriumConstruction, prior: Prior, utility: UtilityFunction, grid: Grid, K: int
    ) -> EquilibriumReport:
        return self.verify_equilibrium(construction.policy, prior, utility, grid, K, construction.certificate)

    def independent_gap_evidence(
        self, prior: Prior, utility: UtilityFunction, grid: Grid, K: int = 32
    ) -> EquilibriumReport:
        """Gap of the product of single-receiver marginals; positive evidence that V is not additive."""
        joint = self.equilibria.independent_policy(prior, utility.n).joint(K)
        return self.verify_equilibrium(joint, prior, utility, grid, K)

    # Welfare and price of stability

    def construct(self, family: str, prior: Prior, utility: UtilityFunction, mu: Optional[float] = None):
        """Dispatch to the named family's constructor."""
        eq, multi = self.equilibria, self.multi
        if family == "sup-small":
            return eq.construct_sup_small(prior, utility)
        if family == "sub-small":
            return eq.construct_sub_small(prior, utility)
        if family in ("sup-large", "sub-large"):
            if utility.n != 2:
                raise PreconditionError(f"{family} is a two-receiver family, got n={utility.n}")
            r, t = utility.v(2), utility.v(1)
            if family == "sup-large":
                return eq.construct_sup_large(prior, t / r, r)
            return eq.construct_sub_large(prior, t / r, mu, r)
        if family == "sup-multi":
            return multi.construct_sup_large_multi(prior, utility)
        if family == "sub-multi-even":
            return multi.construct_sub_large_multi_even(prior, utility, mu)
        if family == "sub-multi-odd":
            return multi.construct_sub_large_multi_odd(prior, utility, mu)
        if family == "independent":
            return eq.construct_independent_additive(prior, utility)
        raise PreconditionError(f"unknown family {family!r}; expected one of {', '.join(FAMILIES)}")

    def pos_bound(
        self,
        family: str,
        prior: Prior,
        utility: UtilityFunction,
        parameter: Optional[float] = None,
        mu: Optional[float] = None,
        K: Optional[int] = None,
    ) -> PoSResult:
        if family not in FAMILIES:
            raise PreconditionError(f"unknown family {family!r}; expected one of {', '.join(FAMILIES)}")
        optimum = optimal_welfare(utility).value
        lam = prior.lam

        if family == "independent":
            built = self.equilibria.construct_independent_additive(prior, utility)
            return self._result(family, prior, parameter, utility.n, None, optimum, built.closed_form_welfare, 1.0)

        if lam <= 0.5:
            # Small prior: every family collapses onto the welfare-optimal construction.
            small = _SMALL_PRIOR[family]
            built = self.construct(small, prior, utility)
            return self._result(family, prior, parameter, utility.n, None, optimum, built.closed_form_welfare, 1.0)

        if family in ("sup-small", "sub-small"):
            raise FeasibilityError(f"no bound available from {family} at lambda={lam} > 1/2")

        try:
            built = self.construct(family, prior, utility, mu)
        except FeasibilityError as e:
            raise FeasibilityError(f"no bound available from {family}: {e}") from e
        params = built.params
        if family == "sup-large":
            mu_used = params["mu_s"]
            bound = 1.0 / (1.0 - mu_used**2 * (0.5 - params["rho"]))
        elif family == "sub-large":
            mu_used, rho = params["mu"], params["rho"]
            bound = 2 * rho / (2 * rho - mu_used**2 * (2 * rho - 1))
        elif family == "sup-multi":
            mu_used = params["mu"]
            vn = utility.v(utility.n)
            bound = vn / (vn + mu_used**2 * params["R"])
        elif family == "sub-multi-even":
            mu_used = params["mu"]
            vh = utility.v(utility.n // 2)
            bound = vh / (vh + mu_used**2 * params["S"])
        else:
            mu_used = params["mu1"]
            numeric = welfare(built.policy, built.policy, utility, K or self.default_K, self.tie_tol)
            return self._result(family, prior, parameter, utility.n, mu_used, optimum, numeric, None)

        result = self._result(
            family, prior, parameter, utility.n, mu_used, optimum, built.closed_form_welfare, bound
        )
        if abs(result.ratio - bound) > 1e-12 * max(1.0, bound):
            logger.warning("PoS bound %.15g disagrees with welfare ratio %.15g", bound, result.ratio)
        return result

    @staticmethod
    def _result(
        family: str,
        prior: Prior,
        parameter: Optional[float],
        n: int,
        mu: Optional[float],
        optimum: float,
        eq_welfare: float,
        bound: Optional[float],
    ) -> PoSResult:
        ratio = optimum / eq_welfare
        if ratio < 1 - 1e-9:
            logger.warning("PoS ratio %.12g below 1: equilibrium welfare exceeds the optimum", ratio)
        return PoSResult(
            family=family,
            lam=prior.lam,
            parameter=parameter,
            n=n,
            mu=mu,
            optimal_welfare=optimum,
            equilibrium_welfare=eq_welfare,
            ratio=ratio,
            closed_form_bound=bound,
        )

    # Full/null strategy table

    def intro_game_table(self, prior: Prior, utility: UtilityFunction) -> IntroGameTable:
        n = utility.n
        strategies = {"full": full_disclosure_policy(prior, n), "null": null_policy(prior, n)}
        payoffs = {
            f"{a}/{b}": mean_payoff(strategies[a], strategies[b], utility, self.tie_tol)
            for a in strategies
            for b in strategies
        }
        equilibria = []
        for a in strategies:
            for b in strategies:
                own_ok = all(payoffs[f"{a}/{b}"] >= payoffs[f"{d}/{b}"] - 1e-12 for d in strategies)
                other_ok = all(payoffs[f"{b}/{a}"] >= payoffs[f"{d}/{a}"] - 1e-12 for d in strategies)
                if own_ok and other_ok:
                    equilibria.append(f"{a}/{b}")
        return IntroGameTable(payoffs=payoffs, equilibria=equilibria)
