from __future__ import annotations

from functools import lru_cache
from typing import List, Optional

import numpy as np

from persuasion.core.errors import PreconditionError, SolverError
from persuasion.core.logging import get_logger
from persuasion.model.reports import BestResponseResult
from persuasion.model.schemas import (
    MIN_WEIGHT,
    Grid,
    HyperplaneCertificate,
    IndependentPolicy,
    Prior,
    SignalingPolicy,
    UtilityFunction,
)
from persuasion.service.payoff_service import DEFAULT_TIE_TOL, payoff_at_points
from persuasion.service.policy_service import discretize_arrays
from persuasion.service.simplex_service import LinearProgram, SimplexSolver


logger = get_logger(__name__)


@lru_cache(maxsize=32)
def grid_payoffs(
    opponent: SignalingPolicy,
    utility: UtilityFunction,
    grid: Grid,
    K: int,
    tie_tol: float = DEFAULT_TIE_TOL,
) -> np.ndarray:
    """Pi(q, discretize(F, K)) on every grid point, cached for reuse across solves."""
    values = payoff_at_points(grid.points(), discretize_arrays(opponent, K), utility, tie_tol)
    values.setflags(write=False)
    return values


class BestResponseService:
    """Solves the best-response LP over a grid and extracts the supporting hyperplane."""

    def __init__(self, solver: SimplexSolver, tie_tol: float = DEFAULT_TIE_TOL, support_tol: float = 1e-12):
        self.solver = solver
        self.tie_tol = tie_tol
        self.support_tol = support_tol

    def best_response(
        self,
        opponent: SignalingPolicy,
        prior: Prior,
        utility: UtilityFunction,
        grid: Grid,
        K: int,
        extra_points: Optional[np.ndarray] = None,
    ) -> BestResponseResult:
        n = utility.n
        if opponent.n != n or grid.n != n:
            raise PreconditionError(f"dimension mismatch: opponent {opponent.n}, grid {grid.n}, utility {n}")

        points = grid.points()
        values = np.asarray(grid_payoffs(opponent, utility, grid, K, self.tie_tol))
        if extra_points is not None and len(extra_points):
            extra = np.atleast_2d(np.asarray(extra_points, dtype=float))
            extra_values = payoff_at_points(extra, discretize_arrays(opponent, K), utility, self.tie_tol)
            points = np.vstack([points, extra])
            values = np.concatenate([values, extra_values])

        A = np.vstack([points.T, np.ones(len(points))])
        b = np.append(np.full(n, prior.lam), 1.0)
        solution = self.solver.solve(LinearProgram(c=values, A=A, b=b))
        if not solution.is_optimal:
            logger.error("Best-response LP ended with status %s", solution.status.value)
            raise SolverError(f"best-response LP failed: {solution.status.value}", best=solution)

        alpha = solution.duals[:n]
        beta = float(solution.duals[n])
        certificate = HyperplaneCertificate(alpha=tuple(float(a) for a in alpha), beta=beta)
        envelope = values - (points @ alpha + beta)

        support = np.flatnonzero(solution.x > max(self.support_tol, MIN_WEIGHT))
        weights = solution.x[support]
        weights = weights / weights.sum()
        policy = SignalingPolicy.from_arrays(weights, points[support])

        logger.info(
            "Best response: value=%.12g support=%d pivots=%d", solution.value, len(support), solution.iterations
        )
        return BestResponseResult(
            policy=policy,
            value=float(solution.value),
            certificate=certificate,
            envelope_violation=float(envelope.max()),
            support_slack=float(np.abs(envelope[support]).max(initial=0.0)),
            iterations=solution.iterations,
            duality_gap=solution.duality_gap,
        )

    def per_receiver_best_response(
        self,
        independent: IndependentPolicy,
        prior: Prior,
        utility: UtilityFunction,
        points_per_axis: int,
        K: int,
    ) -> List[BestResponseResult]:
        """One single-receiver LP per marginal; valid when the utility is additive."""
        if not utility.is_additive():
            raise PreconditionError("per-receiver decomposition needs an additive utility")
        table = utility.table() if not utility.is_anonymous else None
        grid = Grid(n=1, points_per_axis=points_per_axis)
        results = []
        for j, marginal in enumerate(independent.marginals):
            unit = utility.v(1) if utility.is_anonymous else float(table[1 << j])
            single = UtilityFunction.anonymous([0.0, unit])
            results.append(self.best_response(marginal, prior, single, grid, K))
        return results
