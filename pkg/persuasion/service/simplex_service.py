"""Dense two-phase tableau simplex for equality-form LPs.

    maximize c.x  subject to  A x = b,  x >= 0

Duals come from the final basis, so every optimal solve also returns the
certificate y with c - A^T y <= tol and b.y = c.x.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np

from persuasion.core.logging import get_logger


logger = get_logger(__name__)


class LPStatus(str, Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    STALLED = "stalled"


class PivotRule(str, Enum):
    DANTZIG = "dantzig"
    BLAND = "bland"


@dataclass(frozen=True)
class LinearProgram:
    c: np.ndarray
    A: np.ndarray
    b: np.ndarray

    def __post_init__(self) -> None:
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        c = np.asarray(self.c, dtype=float).ravel()
        b = np.asarray(self.b, dtype=float).ravel()
        if A.shape != (b.size, c.size):
            raise ValueError(f"shape mismatch: A {A.shape}, b {b.size}, c {c.size}")
        if not (np.all(np.isfinite(A)) and np.all(np.isfinite(b)) and np.all(np.isfinite(c))):
            raise ValueError("LP data must be finite")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "b", b)

    @property
    def shape(self) -> tuple[int, int]:
        return self.A.shape


@dataclass
class LPSolution:
    status: LPStatus
    x: Optional[np.ndarray] = None
    value: Optional[float] = None
    duals: Optional[np.ndarray] = None
    basis: Optional[np.ndarray] = None
    iterations: int = 0
    primal_residual: float = float("nan")
    duality_gap: float = float("nan")
    max_reduced_cost: float = float("nan")
    notes: list[str] = field(default_factory=list)

    @property
    def is_optimal(self) -> bool:
        return self.status is LPStatus.OPTIMAL


class SimplexSolver:
    def __init__(
        self,
        tol: float = 1e-9,
        pivot_rule: PivotRule | str = PivotRule.DANTZIG,
        stall_factor: int = 10,
        max_iter: Optional[int] = None,
    ):
        self.tol = tol
        self.pivot_tol = tol
        self.pivot_rule = PivotRule(pivot_rule)
        self.stall_factor = stall_factor
        self.max_iter = max_iter

    @staticmethod
    def _pivot(T: np.ndarray, row: int, col: int) -> None:
        T[row] /= T[row, col]
        factors = T[:, col].copy()
        factors[row] = 0.0
        T -= np.outer(factors, T[row])

    @staticmethod
    def _load_objective(T: np.ndarray, cost: np.ndarray, basis: np.ndarray) -> None:
        m = T.shape[0] - 1
        cb = cost[basis]
        T[m, :-1] = cost - cb @ T[:m, :-1]
        T[m, -1] = -(cb @ T[:m, -1])

    def _enter(self, d: np.ndarray, allowed: np.ndarray, bland: bool) -> int:
        cand = np.flatnonzero((d > self.tol) & allowed)
        if cand.size == 0:
            return -1
        if bland:
            return int(cand[0])
        return int(cand[np.argmax(d[cand])])

    def _leave(self, T: np.ndarray, col: int, basis: np.ndarray) -> int:
        m = T.shape[0] - 1
        column = T[:m, col]
        rows = np.flatnonzero(column > self.pivot_tol)
        if rows.size == 0:
            return -1
        ratios = T[rows, -1] / column[rows]
        best = ratios.min()
        ties = rows[ratios <= best + 1e-12 * max(1.0, abs(best))]
        return int(ties[np.argmin(basis[ties])])

    def _iterate(self, T: np.ndarray, basis: np.ndarray, allowed: np.ndarray, iterations: int) -> tuple[LPStatus, int]:
        m = T.shape[0] - 1
        ncols = T.shape[1] - 1
        stall_limit = self.stall_factor * (m + ncols)
        max_iter = self.max_iter or 50 * (m + ncols) + 1000
        bland = self.pivot_rule is PivotRule.BLAND
        best = -T[m, -1]
        stall = 0
        while iterations < max_iter:
            col = self._enter(T[m, :-1], allowed, bland)
            if col < 0:
                return LPStatus.OPTIMAL, iterations
            row = self._leave(T, col, basis)
            if row < 0:
                return LPStatus.UNBOUNDED, iterations
            self._pivot(T, row, col)
            basis[row] = col
            rhs = T[:m, -1]
            rhs[(rhs < 0.0) & (rhs > -self.tol)] = 0.0
            iterations += 1
            value = -T[m, -1]
            if value > best + 1e-12:
                best = value
                stall = 0
                continue
            stall += 1
            if stall > stall_limit:
                if bland:
                    logger.error("Simplex stalled under Bland's rule after %d pivots", iterations)
                    return LPStatus.STALLED, iterations
                logger.warning("Degenerate stall after %d pivots; switching to Bland's rule", iterations)
                bland = True
                stall = 0
        return LPStatus.STALLED, iterations

    def solve(self, lp: LinearProgram) -> LPSolution:
        A, b, c = lp.A, lp.b, lp.c
        m, nv = A.shape
        sign = np.where(b < 0, -1.0, 1.0)
        full = np.hstack([A * sign[:, None], np.eye(m)])
        rhs = b * sign
        ncols = nv + m

        T = np.zeros((m + 1, ncols + 1))
        T[:m, :ncols] = full
        T[:m, -1] = rhs
        basis = np.arange(nv, ncols)

        # Phase 1: maximize -sum(artificials)
        cost1 = np.zeros(ncols)
        cost1[nv:] = -1.0
        self._load_objective(T, cost1, basis)
        status, iterations = self._iterate(T, basis, np.ones(ncols, dtype=bool), 0)
        if status is not LPStatus.OPTIMAL:
            return LPSolution(status=LPStatus.STALLED, iterations=iterations)
        infeasibility = T[m, -1]
        if infeasibility > self.tol * max(1.0, float(np.abs(rhs).max(initial=0.0))):
            logger.info("LP infeasible (phase-1 residual %.3g)", infeasibility)
            return LPSolution(status=LPStatus.INFEASIBLE, iterations=iterations)

        # Drive artificials out of the basis where a structural column can replace them
        for row in range(m):
            if basis[row] >= nv:
                candidates = np.abs(T[row, :nv])
                col = int(np.argmax(candidates)) if nv else -1
                if col >= 0 and candidates[col] > self.tol:
                    self._pivot(T, row, col)
                    basis[row] = col

        # Phase 2
        cost2 = np.concatenate([c, np.zeros(m)])
        allowed = np.zeros(ncols, dtype=bool)
        allowed[:nv] = True
        self._load_objective(T, cost2, basis)
        status, iterations = self._iterate(T, basis, allowed, iterations)
        if status is not LPStatus.OPTIMAL:
            return LPSolution(status=status, iterations=iterations)

        x, y = self._refine(full, rhs, cost2, basis, T)
        x = np.where(np.abs(x) <= self.tol, 0.0, x)[:nv]
        x = np.maximum(x, 0.0)
        duals = y * sign
        value = float(c @ x)
        solution = LPSolution(
            status=LPStatus.OPTIMAL,
            x=x,
            value=value,
            duals=duals,
            basis=basis.copy(),
            iterations=iterations,
            primal_residual=float(np.abs(A @ x - b).max(initial=0.0)),
            duality_gap=abs(value - float(b @ duals)),
            max_reduced_cost=float((c - A.T @ duals).max(initial=-np.inf)),
        )
        if solution.duality_gap > self.tol * (1.0 + abs(value)) or solution.max_reduced_cost > self.tol:
            logger.warning(
                "Optimality certificate loose: gap=%.3g, reduced cost=%.3g",
                solution.duality_gap,
                solution.max_reduced_cost,
            )
        logger.debug("LP solved in %d pivots, value=%.12g", iterations, value)
        return solution

    def _refine(
        self, full: np.ndarray, rhs: np.ndarray, cost: np.ndarray, basis: np.ndarray, T: np.ndarray
    ) -> tuple[np.ndarray, np.ndarray]:
        """Recompute x_B and y from the original columns of the final basis."""
        m = full.shape[0]
        x = np.zeros(full.shape[1])
        B = full[:, basis]
        try:
            xb = np.linalg.solve(B, rhs)
            y = np.linalg.solve(B.T, cost[basis])
        except np.linalg.LinAlgError:
            logger.warning("Final basis is singular; using tableau values")
            xb = T[:m, -1].copy()
            y = cost[basis] @ T[:m, full.shape[1] - m:full.shape[1]]
        if np.any(xb < -self.tol):
            xb = T[:m, -1].copy()
        x[basis] = xb
        return x, y


def support_enumeration_oracle(lp: LinearProgram, tol: float = 1e-9) -> Optional[float]:
    """Best objective over all basic solutions, by brute force over column subsets."""
    A, b, c = lp.A, lp.b, lp.c
    m, nv = A.shape
    combos = np.array(list(itertools.combinations(range(nv), m)), dtype=np.int64)
    if combos.size == 0:
        return None
    B = np.transpose(A[:, combos], (1, 0, 2))
    det = np.linalg.det(B)
    ok = np.abs(det) > 1e-12
    if not np.any(ok):
        return None
    B, combos = B[ok], combos[ok]
    x = np.linalg.solve(B, np.broadcast_to(b, (len(B), m))[..., None])[..., 0]
    feasible = np.all(x >= -tol, axis=1)
    if not np.any(feasible):
        return None
    values = (c[combos[feasible]] * x[feasible]).sum(axis=1)
    return float(values.max())
