from __future__ import annotations

from typing import Callable, Iterable, List, Optional, Tuple

import numpy as np

from persuasion.core.errors import PersuasionError, PreconditionError
from persuasion.core.logging import get_logger
from persuasion.model.reports import ConditionCheck, FeasibleInterval, InfeasibilityProbe
from persuasion.model.schemas import UtilityFunction
from persuasion.service.closed_forms import (
    antidiagonal_conditions,
    antidiagonal_params,
    is_half,
    sub_closed_form_roots,
    sub_half_point,
    sub_large_conditions,
    sub_large_params,
    sub_multi_even_conditions,
    sub_multi_even_params,
)
from persuasion.utils.roots import bisect_boundary, scan_interval


logger = get_logger(__name__)

CONDITION_TOL = 1e-11
POINT_TOL = 1e-9


def _all_hold(rows: Iterable[ConditionCheck], tol: float) -> bool:
    return all(c.holds(tol) for c in rows)


class RegionService:
    """Admissible mass intervals I and the utility regions C where they are nonempty."""

    def __init__(self, scan_step: float = 1e-3, bisect_tol: float = 1e-9):
        self.scan_step = scan_step
        self.bisect_tol = bisect_tol

    # Generic interval search

    def _interval(
        self,
        predicate: Callable[[float], bool],
        candidates: Iterable[Optional[float]],
        lo: float,
        hi: float,
    ) -> Optional[Tuple[float, float]]:
        found = scan_interval(predicate, lo, hi, self.scan_step, self.bisect_tol)
        if found is not None:
            return found
        # Narrower than one scan step: try the closed-form landmarks.
        for x in candidates:
            if x is None or not lo <= x <= hi or not predicate(x):
                continue
            below = max(lo, x - self.scan_step)
            above = min(hi, x + self.scan_step)
            lower = below if predicate(below) else bisect_boundary(predicate, x, below, self.bisect_tol)
            upper = above if predicate(above) else bisect_boundary(predicate, x, above, self.bisect_tol)
            return lower, upper
        return None

    # Two receivers

    def sub_feasible(self, lam: float, rho: float, mu: float, r: float = 1.0, tol: float = CONDITION_TOL) -> bool:
        try:
            return _all_hold(sub_large_conditions(sub_large_params(lam, rho, mu, r)), tol)
        except PreconditionError:
            return False

    def sub_feasible_interval(self, lam: float, rho: float, r: float = 1.0) -> Optional[FeasibleInterval]:
        """I(lambda, rho), or None when no mass in (0, 1/2] certifies the layout."""
        if lam <= 0.5:
            raise PreconditionError(f"large-prior family needs lambda > 1/2, got {lam}")
        if rho < 0.5 - 1e-12:
            raise PreconditionError(f"submodular family needs rho >= 1/2, got {rho}")
        mu_lb, mu_ub = sub_closed_form_roots(lam, rho, r)

        if is_half(rho):
            mu = sub_half_point(lam)
            if not self.sub_feasible(lam, 0.5, mu, r, POINT_TOL):
                logger.info("No admissible mass at lambda=%.6g, rho=1/2", lam)
                return None
            bounds = (mu, mu)
        else:
            candidates = [mu_lb, mu_ub]
            if mu_lb is not None and mu_ub is not None:
                candidates.append(0.5 * (mu_lb + mu_ub))
            bounds = self._interval(
                lambda m: self.sub_feasible(lam, rho, m, r), candidates, self.bisect_tol, 0.5
            )
            if bounds is None:
                logger.info("Empty feasible interval at lambda=%.6g, rho=%.6g", lam, rho)
                return None

        endpoint_violation = max(
            max(c.violation for c in sub_large_conditions(sub_large_params(lam, rho, mu, r)))
            for mu in bounds
        )
        return FeasibleInterval(
            lower=bounds[0],
            upper=bounds[1],
            closed_form_lower=mu_lb,
            closed_form_upper=mu_ub,
            endpoint_violation=endpoint_violation,
        )

    def probe_infeasible_sub(self, lam: float, rho: float, r: float = 1.0) -> InfeasibilityProbe:
        """Can the anti-diagonal plus (1,1)-mass layout be certified by a nonnegative hyperplane?"""
        if lam <= 0.5:
            raise PreconditionError(f"large-prior family needs lambda > 1/2, got {lam}")
        if is_half(rho):
            mu = sub_half_point(lam)
            p_hat, alpha, beta = antidiagonal_params(lam, rho, mu, r)
            rows = antidiagonal_conditions(lam, rho, mu, p_hat, alpha, beta, r)
            certifiable = _all_hold(rows, POINT_TOL)
            return InfeasibilityProbe(
                certifiable=certifiable,
                violated_condition=None if certifiable else max(rows, key=lambda c: c.violation).name,
                mu=mu,
                p_hat=p_hat,
                alpha=alpha,
                beta=beta,
                conditions=rows,
            )

        # rho != 1/2: search mu over the range where p_hat stays in [0, 1].
        # Above 1/2 no mass passes; the report keeps the least-violated rows.
        def rows_at(mu: float) -> Tuple[ConditionCheck, ...]:
            return antidiagonal_conditions(lam, rho, mu, *antidiagonal_params(lam, rho, mu, r), r)

        grid = np.linspace(max(0.0, 2 * lam - 1), lam, int(np.ceil(lam / self.scan_step)) + 1)[:-1]
        best_mu, best_rows = None, None
        for mu in grid:
            rows = rows_at(float(mu))
            if _all_hold(rows, CONDITION_TOL):
                p_hat, alpha, beta = antidiagonal_params(lam, rho, float(mu), r)
                return InfeasibilityProbe(
                    certifiable=True, mu=float(mu), p_hat=p_hat, alpha=alpha, beta=beta, conditions=rows
                )
            if best_rows is None or max(c.violation for c in rows) < max(c.violation for c in best_rows):
                best_mu, best_rows = float(mu), rows
        worst = max(best_rows, key=lambda c: c.violation)
        p_hat, alpha, beta = antidiagonal_params(lam, rho, best_mu, r)
        logger.info(
            "No certifiable mass at lambda=%.6g, rho=%.6g: %s off by %.3g at mu=%.6g",
            lam, rho, worst.name, worst.violation, best_mu,
        )
        return InfeasibilityProbe(
            certifiable=False,
            violated_condition=worst.name,
            mu=best_mu,
            p_hat=p_hat,
            alpha=alpha,
            beta=beta,
            conditions=best_rows,
        )

    # n receivers, even

    def sub_multi_feasible(self, lam: float, utility: UtilityFunction, mu: float, tol: float = CONDITION_TOL) -> bool:
        try:
            params = sub_multi_even_params(lam, utility, mu)
        except PreconditionError:
            return False
        return _all_hold(sub_multi_even_conditions(params, utility), tol)

    def sub_multi_feasible_interval(self, lam: float, utility: UtilityFunction) -> Optional[FeasibleInterval]:
        """I(lambda, v, n) for even n."""
        if lam <= 0.5:
            raise PreconditionError(f"large-prior family needs lambda > 1/2, got {lam}")
        if utility.n % 2:
            raise PreconditionError(f"even-n family needs even n, got n={utility.n}")
        # S(n) = 0 collapses the interval onto the single point (2 lambda - 1) / lambda
        point = sub_half_point(lam)
        bounds = self._interval(
            lambda m: self.sub_multi_feasible(lam, utility, m), [point], self.bisect_tol, 0.5
        )
        if bounds is None and self.sub_multi_feasible(lam, utility, point, POINT_TOL):
            bounds = (point, point)
        if bounds is None:
            logger.info("Empty feasible interval at lambda=%.6g, n=%d", lam, utility.n)
            return None
        endpoint_violation = max(
            max(c.violation for c in sub_multi_even_conditions(sub_multi_even_params(lam, utility, mu), utility))
            for mu in bounds
        )
        return FeasibleInterval(lower=bounds[0], upper=bounds[1], endpoint_violation=endpoint_violation)

    # Region tables

    def region_rows(
        self,
        target: str,
        lam: float,
        n: int = 2,
        values: Optional[Iterable[float]] = None,
    ) -> List[dict]:
        """One row per rho (target sub2) or tau (target sub-multi, v(k) = k^tau)."""
        rows: List[dict] = []
        if target == "sub2":
            grid = values if values is not None else np.round(np.arange(0.5, 1.0 + 1e-9, 0.01), 10)
            for rho in grid:
                interval = self._safe(lambda: self.sub_feasible_interval(lam, float(rho)))
                rows.append(self._row(lam, 2, float(rho), interval))
        elif target == "sub-multi":
            grid = values if values is not None else np.round(np.arange(0.05, 1.0 + 1e-9, 0.05), 10)
            for tau in grid:
                utility = UtilityFunction.power(n, float(tau))
                interval = self._safe(lambda: self.sub_multi_feasible_interval(lam, utility))
                rows.append(self._row(lam, n, float(tau), interval))
        else:
            raise PreconditionError(f"unknown region target {target!r}; expected sub2 or sub-multi")
        return rows

    @staticmethod
    def _safe(compute: Callable[[], Optional[FeasibleInterval]]) -> Optional[FeasibleInterval]:
        try:
            return compute()
        except PersuasionError as e:
            logger.warning("Region point skipped: %s", e)
            return None

    @staticmethod
    def _row(lam: float, n: int, rho: float, interval: Optional[FeasibleInterval]) -> dict:
        return {
            "lambda": lam,
            "n": n,
            "rho": rho,
            "feasible": interval is not None,
            "mu_lb": interval.lower if interval else float("nan"),
            "mu_ub": interval.upper if interval else float("nan"),
        }
