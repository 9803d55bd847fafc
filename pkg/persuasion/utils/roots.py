"""Scalar and small-system root finding used by the closed-form families."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Tuple

import numpy as np


def smaller_root(a: float, b: float, c: float) -> Optional[float]:
    """Smaller real root of a x^2 + b x + c, or the linear root when a vanishes."""
    if abs(a) < 1e-15:
        if b == 0.0:
            return None
        return -c / b
    disc = b * b - 4.0 * a * c
    if disc < 0.0:
        if disc < -1e-14 * (b * b + abs(4.0 * a * c)):
            return None
        disc = 0.0
    sq = math.sqrt(disc)
    q = -0.5 * (b + math.copysign(sq, b))
    if q == 0.0:
        return 0.0
    return min(q / a, c / q)


def bisect(f: Callable[[float], float], lo: float, hi: float, tol: float = 1e-9) -> float:
    flo = f(lo)
    if flo == 0.0:
        return lo
    fhi = f(hi)
    if fhi == 0.0:
        return hi
    if flo * fhi > 0.0:
        raise ValueError(f"root is not bracketed in [{lo}, {hi}]")
    steps = max(1, int(math.ceil(math.log2(abs(hi - lo) / tol))))
    for _ in range(steps):
        mid = 0.5 * (lo + hi)
        fmid = f(mid)
        if fmid == 0.0:
            return mid
        if flo * fmid < 0.0:
            hi = mid
        else:
            lo, flo = mid, fmid
    return 0.5 * (lo + hi)


def bisect_boundary(
    predicate: Callable[[float], bool], inside: float, outside: float, tol: float = 1e-9
) -> float:
    """Boundary of a predicate's true set, returned on the true side."""
    while abs(outside - inside) > tol:
        mid = 0.5 * (inside + outside)
        if predicate(mid):
            inside = mid
        else:
            outside = mid
    return inside


def scan_interval(
    predicate: Callable[[float], bool],
    lo: float,
    hi: float,
    step: float,
    tol: float = 1e-9,
) -> Optional[Tuple[float, float]]:
    """First run of points where ``predicate`` holds, boundaries refined by bisection."""
    count = max(1, int(math.ceil((hi - lo) / step - 1e-9)))
    xs = [lo + (hi - lo) * i / count for i in range(count + 1)]
    flags = [predicate(x) for x in xs]
    if not any(flags):
        return None
    first = flags.index(True)
    last = first
    while last + 1 < len(xs) and flags[last + 1]:
        last += 1
    lower = xs[first] if first == 0 else bisect_boundary(predicate, xs[first], xs[first - 1], tol)
    upper = xs[last] if last == len(xs) - 1 else bisect_boundary(predicate, xs[last], xs[last + 1], tol)
    return lower, upper


@dataclass
class NewtonResult:
    x: np.ndarray
    residual: np.ndarray
    norm: float
    iterations: int
    converged: bool


def damped_newton(
    residual: Callable[[np.ndarray], np.ndarray],
    x0: np.ndarray,
    tol: float = 1e-12,
    max_iter: int = 200,
    fd_step: float = 1e-7,
) -> NewtonResult:
    """Newton's method with a forward-difference Jacobian and step halving."""
    x = np.asarray(x0, dtype=float).copy()
    r = np.asarray(residual(x), dtype=float)
    norm = float(np.linalg.norm(r)) if np.all(np.isfinite(r)) else math.inf
    best = NewtonResult(x.copy(), r, norm, 0, norm <= tol)
    for it in range(1, max_iter + 1):
        if norm <= tol:
            return NewtonResult(x, r, norm, it - 1, True)
        jac = np.empty((r.size, x.size))
        for k in range(x.size):
            h = fd_step * max(1.0, abs(x[k]))
            xk = x.copy()
            xk[k] += h
            jac[:, k] = (np.asarray(residual(xk), dtype=float) - r) / h
        if not np.all(np.isfinite(jac)):
            break
        delta = np.linalg.lstsq(jac, -r, rcond=None)[0]
        t = 1.0
        improved = False
        for _ in range(40):
            trial = x + t * delta
            rt = np.asarray(residual(trial), dtype=float)
            nt = float(np.linalg.norm(rt)) if np.all(np.isfinite(rt)) else math.inf
            if nt < norm:
                x, r, norm = trial, rt, nt
                improved = True
                break
            t *= 0.5
        if norm < best.norm:
            best = NewtonResult(x.copy(), r, norm, it, norm <= tol)
        if not improved:
            break
    best.converged = best.norm <= tol
    return best
