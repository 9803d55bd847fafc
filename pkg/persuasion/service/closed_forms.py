"""Scalar machinery of the large-prior equilibrium families.

Everything here is pure arithmetic on the family parameters: mass quadratics,
binomial utility averages, hyperplane parameters as functions of the mass at
the all-ones posterior, and the equality/inequality rows that certify a
candidate. Two-receiver utilities are normalized as r = v(2), t = v(1) = rho*r.
"""

from __future__ import annotations

import math
from math import comb
from typing import List, Optional, Tuple

import numpy as np

from persuasion.core.errors import PreconditionError, SolverError
from persuasion.model.reports import ConditionCheck
from persuasion.model.schemas import (
    MultiReceiverScalars,
    SubLargePriorParams,
    SubMultiEvenParams,
    SubMultiOddParams,
    SupLargePriorParams,
    SupMultiParams,
    UtilityFunction,
)
from persuasion.utils.roots import bisect, damped_newton, smaller_root


HALF_TOL = 1e-12


def is_half(rho: float) -> bool:
    return abs(rho - 0.5) <= HALF_TOL


# Supermodular, two receivers


def sup_quadratic(mu: float, lam: float, rho: float, r: float = 1.0) -> float:
    t = rho * r
    return mu * mu * (2 * t - r) + mu * lam * (3 * r - 2 * t) + r * (2 - 4 * lam)


def solve_mu_sup(lam: float, rho: float) -> float:
    """Mass at (1,1), the minus-branch root of the mass quadratic in stable form."""
    if lam < 0.5:
        raise PreconditionError(f"large-prior family needs lambda >= 1/2, got {lam}")
    if not 0.0 < rho <= 0.5 + HALF_TOL:
        raise PreconditionError(f"supermodular family needs rho in (0, 1/2], got {rho}")
    if is_half(rho):
        return (2 * lam - 1) / lam
    b = lam * (3 - 2 * rho)
    disc = b * b - 4 * (2 * rho - 1) * (2 - 4 * lam)
    if disc < 0:
        raise SolverError(f"negative discriminant {disc} at lambda={lam}, rho={rho}")
    return 2 * (4 * lam - 2) / (b + math.sqrt(disc))


def mu_sup_bisection(lam: float, rho: float, tol: float = 1e-13) -> float:
    """Independent root of the mass quadratic on [0, 1]; f(0) < 0 < f(1) for lambda > 1/2."""
    if lam == 0.5:
        return 0.0
    return bisect(lambda mu: sup_quadratic(mu, lam, rho), 0.0, 1.0, tol)


def sup_large_params(lam: float, rho: float, r: float = 1.0) -> SupLargePriorParams:
    mu = solve_mu_sup(lam, rho)
    t = rho * r
    alpha = (0.5 - 3 * mu / 8) * r + 0.25 * mu * t
    p_hat = (1 - mu) * r / (2 * alpha)
    return SupLargePriorParams(
        lam=lam,
        rho=rho,
        r=r,
        mu_s=mu,
        p_hat=p_hat,
        alpha=alpha,
        beta=0.0,
        quadratic_residual=sup_quadratic(mu, lam, rho, r),
    )


def sup_large_conditions(p: SupLargePriorParams) -> Tuple[ConditionCheck, ...]:
    mu, a, ph, r = p.mu_s, p.alpha, p.p_hat, p.r
    t = p.rho * r
    rows = [
        ConditionCheck.equality("bayes", 0.5 * ph * (1 - mu) + mu, p.lam),
        ConditionCheck.equality("beta = 0", p.beta, 0.0),
        ConditionCheck.equality("payoff at (p_hat,p_hat)", (1 - mu) * r, 2 * a * ph + p.beta),
        ConditionCheck.equality("payoff at (1,1)", 0.5 * mu * t + (1 - 0.75 * mu) * r, 2 * a + p.beta),
        ConditionCheck.at_most("p_hat <= 1", ph, 1.0),
    ]
    # Both dominance rows are affine in q2, so the endpoints of [0, p_hat] suffice.
    for q2 in (0.0, ph):
        diag = (q2 / ph) * (1 - mu) * r + ((ph - q2) / ph) * (1 - mu) * t
        rows.append(ConditionCheck.at_most(f"payoff at (p_hat,{q2:.6g})", diag, a * (ph + q2)))
        rows.append(ConditionCheck.at_most(f"payoff at (1,{q2:.6g})", diag + 0.5 * mu * t, a * (1 + q2)))
    return tuple(rows)


def sup_large_welfare(p: SupLargePriorParams) -> float:
    return p.r * (1 - p.mu_s**2 * (0.5 - p.rho))


# Submodular, two receivers


def sub_large_params(lam: float, rho: float, mu: float, r: float = 1.0) -> SubLargePriorParams:
    if lam <= 0.5:
        raise PreconditionError(f"large-prior family needs lambda > 1/2, got {lam}")
    if not 0.0 < mu <= 0.5 + HALF_TOL:
        raise PreconditionError(f"mass mu must lie in (0, 1/2], got {mu}")
    t = rho * r
    alpha = (t * mu - mu * mu * (2 * t - r)) / (4 * lam - 2)
    if alpha <= 0:
        raise PreconditionError(f"hyperplane slope {alpha} is not positive at mu={mu}")
    return SubLargePriorParams(
        lam=lam,
        rho=rho,
        r=r,
        mu=mu,
        ell=mu * r / (2 * alpha),
        p_hat=(2 * alpha - mu * (r - t)) / (2 * alpha),
        alpha=alpha,
        beta=(1 - mu / 2) * t - alpha,
    )


def sub_large_conditions(p: SubLargePriorParams) -> Tuple[ConditionCheck, ...]:
    mu, a, b, ell, ph, r = p.mu, p.alpha, p.beta, p.ell, p.p_hat, p.r
    t = p.rho * r
    return (
        ConditionCheck.equality("payoff at (1,0)", (1 - mu / 2) * t, a + b),
        ConditionCheck.equality("payoff at (1,ell)", (1 - mu) * t + 0.5 * mu * t + 0.5 * mu * r, a + a * ell + b),
        ConditionCheck.equality("payoff at (p_hat,ell)", t, a * (ph + ell) + b),
        ConditionCheck.equality("bayes", ell * mu / 2 + (ph + ell) * (1 - 2 * mu) / 2 + mu, p.lam),
        ConditionCheck.at_most("payoff at (1,1)", r - mu * (r - t), 2 * a + b),
        ConditionCheck.at_most("payoff at (ell,ell)", 2 * mu * t, 2 * a * ell + b),
        ConditionCheck.at_most("alpha >= 0", -a, 0.0),
        ConditionCheck.at_most("beta >= 0", -b, 0.0),
        ConditionCheck.at_most("ell >= 0", -ell, 0.0),
        ConditionCheck.at_most("ell <= p_hat", ell, ph),
        ConditionCheck.at_most("p_hat <= 1", ph, 1.0),
    )


def sub_closed_form_roots(lam: float, rho: float, r: float = 1.0) -> Tuple[Optional[float], Optional[float]]:
    """Smaller roots of the reduced payoff-at-(1,1) and payoff-at-(ell,ell) conditions."""
    t = rho * r
    k = 4 * lam - 2
    a = 2 * t - r
    mu_lb = smaller_root(a, -(2 * t * (1 - lam) + k * (r - t)), (r - t) * k)
    mu_ub = smaller_root(a, -(k * (2.5 * t - r) + t), t * k)
    return mu_lb, mu_ub


def sub_large_welfare(p: SubLargePriorParams) -> float:
    t = p.rho * p.r
    return 2 * t - p.mu**2 * (2 * t - p.r)


def sub_half_point(lam: float) -> float:
    """The single admissible mass when 2 v(1) = v(2)."""
    return (2 * lam - 1) / lam


# Anti-diagonal with mass at (1,1): certifiable only when 2t = r


def antidiagonal_params(lam: float, rho: float, mu: float, r: float = 1.0) -> Tuple[float, float, float]:
    """(p_hat, alpha, beta) pinned by Bayes plausibility and the two support equalities."""
    t = rho * r
    p_hat = 2 * (lam - mu) / (1 - mu)
    alpha = (0.5 * mu * t + (1 - 0.75 * mu) * r - (1 - mu) * t) / (2 - p_hat)
    beta = (1 - mu) * t - alpha * p_hat
    return p_hat, alpha, beta


def antidiagonal_conditions(
    lam: float, rho: float, mu: float, p_hat: float, alpha: float, beta: float, r: float = 1.0
) -> Tuple[ConditionCheck, ...]:
    t = rho * r
    return (
        ConditionCheck.equality("bayes", 0.5 * p_hat * (1 - mu) + mu, lam),
        ConditionCheck.equality("payoff on anti-diagonal", (1 - mu) * t, alpha * p_hat + beta),
        ConditionCheck.equality("payoff at (1,1)", 0.5 * mu * t + (1 - 0.75 * mu) * r, 2 * alpha + beta),
        ConditionCheck.at_most("payoff at (p_hat,p_hat)", (1 - mu) * r, 2 * alpha * p_hat + beta),
        ConditionCheck.at_most("payoff at (1,0)", (1 - mu) * t + 0.5 * mu * t, alpha + beta),
        ConditionCheck.at_most("alpha >= 0", -alpha, 0.0),
        ConditionCheck.at_most("beta >= 0", -beta, 0.0),
        ConditionCheck.at_most("p_hat >= 0", -p_hat, 0.0),
        ConditionCheck.at_most("p_hat <= 1", p_hat, 1.0),
    )


# Binomial utility averages


def _require_anonymous(utility: UtilityFunction) -> Tuple[float, ...]:
    if not utility.is_anonymous:
        raise PreconditionError("multi-receiver families need an anonymous utility")
    return utility.anonymous_values


def binomial_average(v: Tuple[float, ...], size: int, offset: int = 0, start: int = 1) -> float:
    """sum_{j=start}^{size} C(size, j) / 2^size * v(offset + j)."""
    return math.fsum(comb(size, j) * v[offset + j] for j in range(start, size + 1)) / 2.0**size


def multi_scalars(utility: UtilityFunction, require_half: bool = False) -> MultiReceiverScalars:
    v = _require_anonymous(utility)
    n = utility.n
    t_full = binomial_average(v, n)
    scalars = dict(n=n, T_full=t_full, R=2 * t_full - v[n])
    if n % 2 == 0:
        h = n // 2
        t_half = binomial_average(v, h)
        t_bar = binomial_average(v, h, offset=h)
        scalars.update(T_half=t_half, T_bar=t_bar, S=t_half + t_bar + v[h] * (2.0**-h - 2))
    elif require_half:
        raise PreconditionError(f"S(n) is defined for even n only, got n={n}")
    return MultiReceiverScalars(**scalars)


# Supermodular, n receivers


def sup_multi_quadratic(mu: float, lam: float, vn: float, t_full: float) -> float:
    return mu * mu * (2 * t_full - vn) + mu * 2 * lam * (vn - t_full) + vn * (1 - 2 * lam)


def sup_multi_params(lam: float, utility: UtilityFunction) -> SupMultiParams:
    if lam < 0.5:
        raise PreconditionError(f"large-prior family needs lambda >= 1/2, got {lam}")
    s = multi_scalars(utility)
    n = utility.n
    vn = utility.v(n)
    b = 2 * lam * (vn - s.T_full)
    disc = b * b - 4 * s.R * vn * (1 - 2 * lam)
    if disc < 0:
        raise SolverError(f"negative discriminant {disc} in the multi-receiver mass quadratic")
    mu = 2 * vn * (2 * lam - 1) / (b + math.sqrt(disc))
    if not 0.0 <= mu <= 1.0:
        raise PreconditionError(f"mass {mu} outside [0, 1]")
    alpha = (mu * s.T_full + (1 - mu) * vn) / n
    return SupMultiParams(
        lam=lam,
        n=n,
        mu=mu,
        p_hat=(1 - mu) * vn / (n * alpha),
        alpha=alpha,
        T_full=s.T_full,
        R=s.R,
        quadratic_residual=sup_multi_quadratic(mu, lam, vn, s.T_full),
    )


def mu_sup_multi_bisection(lam: float, utility: UtilityFunction, tol: float = 1e-13) -> float:
    s = multi_scalars(utility)
    vn = utility.v(utility.n)
    if lam == 0.5:
        return 0.0
    return bisect(lambda mu: sup_multi_quadratic(mu, lam, vn, s.T_full), 0.0, 1.0, tol)


def sup_multi_conditions(p: SupMultiParams, vn: float) -> Tuple[ConditionCheck, ...]:
    n = p.n
    return (
        ConditionCheck.equality("bayes", 0.5 * p.p_hat * (1 - p.mu) + p.mu, p.lam),
        ConditionCheck.equality("payoff at p_hat*1", (1 - p.mu) * vn, n * p.alpha * p.p_hat),
        ConditionCheck.equality("payoff at 1", (1 - p.mu) * vn + p.mu * p.T_full, n * p.alpha),
        ConditionCheck.at_most("alpha >= 0", -p.alpha, 0.0),
        ConditionCheck.at_most("p_hat <= 1", p.p_hat, 1.0),
    )


def sup_multi_welfare(p: SupMultiParams, vn: float) -> float:
    return vn + p.mu**2 * p.R


# Submodular, even n


def sub_multi_even_params(lam: float, utility: UtilityFunction, mu: float) -> SubMultiEvenParams:
    if lam <= 0.5:
        raise PreconditionError(f"large-prior family needs lambda > 1/2, got {lam}")
    if not 0.0 < mu <= 0.5 + HALF_TOL:
        raise PreconditionError(f"mass mu must lie in (0, 1/2], got {mu}")
    s = multi_scalars(utility, require_half=True)
    h = utility.n // 2
    vh = utility.v(h)
    tie_gain = vh * 2.0**-h + s.T_bar - s.T_half
    alpha = (mu * mu * tie_gain + mu * (1 - 2 * mu) * (vh - s.T_half)) / ((2 * lam - 1) * h)
    if alpha <= 0:
        raise PreconditionError(f"hyperplane slope {alpha} is not positive at mu={mu}")
    ell = mu * tie_gain / (alpha * h)
    return SubMultiEvenParams(
        lam=lam,
        n=utility.n,
        mu=mu,
        ell=ell,
        p_hat=1 + mu * (vh - s.T_half) / (alpha * h) - ell,
        alpha=alpha,
        beta=mu * s.T_half + (1 - mu) * vh - alpha * h,
        T_half=s.T_half,
        T_bar=s.T_bar,
        S=s.S,
    )


def sub_multi_even_conditions(p: SubMultiEvenParams, utility: UtilityFunction) -> Tuple[ConditionCheck, ...]:
    n, h = p.n, p.n // 2
    mu, a, b, ell, ph = p.mu, p.alpha, p.beta, p.ell, p.p_hat
    vh, vn = utility.v(h), utility.v(n)
    tie_high = p.T_bar + vh * 2.0**-h
    return (
        ConditionCheck.equality("payoff at (1,0)", (1 - mu) * vh + mu * p.T_half, a * h + b),
        ConditionCheck.equality("payoff at (1,ell)", (1 - mu) * vh + mu * tie_high, a * h * (1 + ell) + b),
        ConditionCheck.equality("payoff at (p_hat,ell)", vh, a * h * (ph + ell) + b),
        ConditionCheck.equality("bayes", mu * ell / 2 + (1 - 2 * mu) * (ell + ph) / 2 + mu, p.lam),
        ConditionCheck.at_most("payoff at 1", (1 - 2 * mu) * vn + 2 * mu * tie_high, n * a + b),
        ConditionCheck.at_most("payoff at ell*1", 2 * mu * vh, n * a * ell + b),
        ConditionCheck.at_most("alpha >= 0", -a, 0.0),
        ConditionCheck.at_most("beta >= 0", -b, 0.0),
        ConditionCheck.at_most("ell >= 0", -ell, 0.0),
        ConditionCheck.at_most("ell <= p_hat", ell, ph),
        ConditionCheck.at_most("p_hat <= 1", ph, 1.0),
    )


def sub_multi_even_welfare(p: SubMultiEvenParams, utility: UtilityFunction) -> float:
    return 2 * (utility.v(p.n // 2) + p.mu**2 * p.S)


# Submodular, odd n
#
# Block A holds the first (n+1)/2 receivers, block B the remaining (n-1)/2.
# Given (mu1, mu2, beta), the six support equalities fix alpha1, alpha2, ell1,
# ell2, p_hat1, p_hat2 explicitly; Newton then zeroes the two Bayes rows.


class OddBlockAverages:
    def __init__(self, utility: UtilityFunction):
        v = _require_anonymous(utility)
        n = utility.n
        if n % 2 == 0 or n < 3:
            raise PreconditionError(f"odd-n family needs odd n >= 3, got n={n}")
        self.n = n
        self.A = (n + 1) // 2
        self.B = (n - 1) // 2
        self.vA = v[self.A]
        self.vB = v[self.B]
        self.T_A = binomial_average(v, self.A)
        self.T_B = binomial_average(v, self.B)
        self.Ebar_A = binomial_average(v, self.B, offset=self.A, start=0)
        self.Ebar_B = binomial_average(v, self.A, offset=self.B, start=0)


def _odd_unknowns(blocks: OddBlockAverages, mu1: float, mu2: float, beta: float) -> dict:
    A, B = blocks.A, blocks.B
    alpha1 = (mu2 * blocks.T_A + (1 - mu2) * blocks.vA - beta) / A
    alpha2 = (mu1 * blocks.T_B + (1 - mu1) * blocks.vB - beta) / B
    gain1 = mu1 * (blocks.Ebar_A - blocks.T_B)
    gain2 = mu2 * (blocks.Ebar_B - blocks.T_A)
    return dict(
        alpha1=alpha1,
        alpha2=alpha2,
        ell1=gain1 / (alpha1 * A),
        ell2=gain2 / (alpha2 * B),
        p_hat1=((1 - mu2) * blocks.vA + mu2 * blocks.vB - beta - gain2) / (alpha1 * A),
        p_hat2=(mu1 * blocks.vA + (1 - mu1) * blocks.vB - beta - gain1) / (alpha2 * B),
    )


def _odd_bayes(lam: float, mu1: float, mu2: float, u: dict) -> np.ndarray:
    mid = 1 - mu1 - mu2
    return np.array(
        [
            mu1 * u["ell1"] / 2 + mid * (u["ell1"] + u["p_hat1"]) / 2 + mu2 - lam,
            mu2 * u["ell2"] / 2 + mid * (u["ell2"] + u["p_hat2"]) / 2 + mu1 - lam,
        ]
    )


def sub_multi_odd_conditions(
    p: SubMultiOddParams, utility: UtilityFunction
) -> Tuple[ConditionCheck, ...]:
    blocks = OddBlockAverages(utility)
    A, B = blocks.A, blocks.B
    a1, a2, b = p.alpha1, p.alpha2, p.beta
    mu1, mu2 = p.mu1, p.mu2
    mid = 1 - mu1 - mu2

    def plane(xa: float, xb: float) -> float:
        return a1 * A * xa + a2 * B * xb + b

    return (
        ConditionCheck.equality("payoff at (0,1)", mu1 * blocks.T_B + (1 - mu1) * blocks.vB, plane(0, 1)),
        ConditionCheck.equality("payoff at (ell1,1)", mu1 * blocks.Ebar_A + (1 - mu1) * blocks.vB, plane(p.ell1, 1)),
        ConditionCheck.equality("payoff at (1,0)", (1 - mu2) * blocks.vA + mu2 * blocks.T_A, plane(1, 0)),
        ConditionCheck.equality("payoff at (1,ell2)", (1 - mu2) * blocks.vA + mu2 * blocks.Ebar_B, plane(1, p.ell2)),
        ConditionCheck.equality("payoff at (ell1,p_hat2)", mu1 * blocks.vA + (1 - mu1) * blocks.vB, plane(p.ell1, p.p_hat2)),
        ConditionCheck.equality("payoff at (p_hat1,ell2)", (1 - mu2) * blocks.vA + mu2 * blocks.vB, plane(p.p_hat1, p.ell2)),
        ConditionCheck.equality("bayes block A", mu1 * p.ell1 / 2 + mid * (p.ell1 + p.p_hat1) / 2 + mu2, p.lam),
        ConditionCheck.equality("bayes block B", mu2 * p.ell2 / 2 + mid * (p.ell2 + p.p_hat2) / 2 + mu1, p.lam),
        ConditionCheck.at_most("alpha1 >= 0", -a1, 0.0),
        ConditionCheck.at_most("alpha2 >= 0", -a2, 0.0),
        ConditionCheck.at_most("beta >= 0", -b, 0.0),
        ConditionCheck.at_most("ell1 >= 0", -p.ell1, 0.0),
        ConditionCheck.at_most("ell2 >= 0", -p.ell2, 0.0),
        ConditionCheck.at_most("ell1 <= p_hat1", p.ell1, p.p_hat1),
        ConditionCheck.at_most("ell2 <= p_hat2", p.ell2, p.p_hat2),
        ConditionCheck.at_most("p_hat1 <= 1", p.p_hat1, 1.0),
        ConditionCheck.at_most("p_hat2 <= 1", p.p_hat2, 1.0),
        ConditionCheck.at_most("middle mass >= 0", -mid, 0.0),
    )


def solve_sub_multi_odd(
    lam: float,
    utility: UtilityFunction,
    mu1: float,
    seeds: List[Tuple[float, float]],
    tol: float = 1e-12,
    max_iter: int = 200,
) -> SubMultiOddParams:
    """Damped Newton on (mu2, beta) from each seed in turn; first converged run wins."""
    if lam <= 0.5:
        raise PreconditionError(f"large-prior family needs lambda > 1/2, got {lam}")
    if not 0.0 < mu1 < 1.0:
        raise PreconditionError(f"mass mu1 must lie in (0, 1), got {mu1}")
    blocks = OddBlockAverages(utility)

    def residual(x: np.ndarray) -> np.ndarray:
        with np.errstate(divide="ignore", invalid="ignore"):
            try:
                return _odd_bayes(lam, mu1, x[0], _odd_unknowns(blocks, mu1, x[0], x[1]))
            except ZeroDivisionError:
                return np.full(2, np.inf)

    best = None
    for seed in seeds:
        result = damped_newton(residual, np.asarray(seed, dtype=float), tol=tol, max_iter=max_iter)
        if best is None or result.norm < best.norm:
            best = result
        if result.converged:
            break

    mu2, beta = (float(x) for x in best.x)
    try:
        unknowns = _odd_unknowns(blocks, mu1, mu2, beta)
    except ZeroDivisionError as e:
        raise SolverError(f"odd-n system degenerate at mu2={mu2}, beta={beta}", best=best) from e
    draft = SubMultiOddParams(
        lam=lam,
        n=utility.n,
        mu1=mu1,
        mu2=mu2,
        beta=beta,
        residuals=(),
        residual_norm=best.norm,
        iterations=best.iterations,
        converged=best.converged,
        **unknowns,
    )
    rows = sub_multi_odd_conditions(draft, utility)
    residuals = tuple(c.lhs - c.rhs for c in rows[:8])
    params = draft.model_copy(
        update=dict(residuals=residuals, residual_norm=float(np.linalg.norm(residuals)))
    )
    if not best.converged:
        raise SolverError(
            f"odd-n system did not converge after {best.iterations} iterations "
            f"(residual norm {best.norm:.3g})",
            best=params,
        )
    return params
