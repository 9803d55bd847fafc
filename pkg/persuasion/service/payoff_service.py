"""Win-set probabilities, expected sender payoff and welfare.

Opponent policies enter as atomic arrays (weights, points). Each receiver
compares its two posteriors: the own sender wins a receiver whose opponent
coordinate is strictly lower, loses it when strictly higher, and a tie (within
``tie_tol``) is split independently with probability one half.
"""

from __future__ import annotations

from math import comb
from typing import Optional, Sequence, Tuple

import numpy as np

from persuasion.core.errors import PreconditionError
from persuasion.model.schemas import SignalingPolicy, UtilityFunction
from persuasion.service.policy_service import discretize_arrays


DEFAULT_TIE_TOL = 1e-12
_CHUNK_ELEMENTS = 4_000_000

AtomArrays = Tuple[np.ndarray, np.ndarray]


def as_atom_arrays(policy: SignalingPolicy | AtomArrays) -> AtomArrays:
    if isinstance(policy, SignalingPolicy):
        return policy.atom_arrays()
    weights, points = policy
    return np.asarray(weights, dtype=float), np.atleast_2d(np.asarray(points, dtype=float))


def _outcomes(q: np.ndarray, atoms: np.ndarray, tie_tol: float) -> Tuple[np.ndarray, np.ndarray]:
    """Boolean win and tie tensors of shape (len(q), len(atoms), n)."""
    diff = atoms[None, :, :] - q[:, None, :]
    tie = np.abs(diff) <= tie_tol
    win = (diff < 0) & ~tie
    return win, tie


def _anonymous_table(utility: UtilityFunction) -> np.ndarray:
    """M[w, t] = E[v(w + Binomial(t, 1/2))] for w + t <= n."""
    n = utility.n
    v = np.asarray(utility.anonymous_values, dtype=float)
    table = np.zeros((n + 1, n + 1))
    for w in range(n + 1):
        for t in range(n + 1 - w):
            table[w, t] = sum(comb(t, k) * v[w + k] for k in range(t + 1)) / 2.0**t
    return table


def _submasks(mask: int) -> np.ndarray:
    subs = []
    s = mask
    while True:
        subs.append(s)
        if s == 0:
            break
        s = (s - 1) & mask
    return np.array(subs, dtype=np.int64)


def _values_anonymous(win: np.ndarray, tie: np.ndarray, table: np.ndarray) -> np.ndarray:
    return table[win.sum(axis=-1), tie.sum(axis=-1)]


def _values_general(win: np.ndarray, tie: np.ndarray, table: np.ndarray) -> np.ndarray:
    bits = np.int64(1) << np.arange(win.shape[-1], dtype=np.int64)
    win_mask = (win * bits).sum(axis=-1)
    tie_mask = (tie * bits).sum(axis=-1)
    values = table[win_mask]
    for tm in np.unique(tie_mask[tie_mask != 0]):
        sel = tie_mask == tm
        subs = _submasks(int(tm))
        values[sel] = table[win_mask[sel][:, None] | subs[None, :]].mean(axis=1)
    return values


def payoff_at_points(
    points: np.ndarray,
    opponent: SignalingPolicy | AtomArrays,
    utility: UtilityFunction,
    tie_tol: float = DEFAULT_TIE_TOL,
    anonymous_path: Optional[bool] = None,
) -> np.ndarray:
    """Pi(q, F) for every row q of ``points`` against an atomic opponent."""
    weights, atoms = as_atom_arrays(opponent)
    q = np.atleast_2d(np.asarray(points, dtype=float))
    if q.shape[1] != utility.n or atoms.shape[1] != utility.n:
        raise PreconditionError(
            f"dimension mismatch: points {q.shape[1]}, opponent {atoms.shape[1]}, utility n={utility.n}"
        )
    use_anonymous = utility.is_anonymous if anonymous_path is None else anonymous_path
    if use_anonymous and not utility.is_anonymous:
        raise PreconditionError("anonymous payoff path needs an anonymous utility")
    table = _anonymous_table(utility) if use_anonymous else utility.table()
    evaluate = _values_anonymous if use_anonymous else _values_general

    out = np.empty(len(q))
    chunk = max(1, _CHUNK_ELEMENTS // max(1, atoms.size))
    for start in range(0, len(q), chunk):
        win, tie = _outcomes(q[start:start + chunk], atoms, tie_tol)
        out[start:start + chunk] = (evaluate(win, tie, table) * weights).sum(axis=1)
    return out


def expected_payoff(
    q: Sequence[float],
    opponent: SignalingPolicy | AtomArrays,
    utility: UtilityFunction,
    tie_tol: float = DEFAULT_TIE_TOL,
    anonymous_path: Optional[bool] = None,
) -> float:
    return float(payoff_at_points(np.asarray(q, dtype=float)[None, :], opponent, utility, tie_tol, anonymous_path)[0])


def win_set_probability(
    q: Sequence[float],
    subset: int,
    opponent: SignalingPolicy | AtomArrays,
    tie_tol: float = DEFAULT_TIE_TOL,
) -> float:
    """Probability that exactly the receivers in ``subset`` pick the own sender."""
    weights, atoms = as_atom_arrays(opponent)
    q = np.asarray(q, dtype=float)
    n = q.shape[0]
    if subset < 0 or subset >= 1 << n:
        raise PreconditionError(f"subset mask {subset} is not a subset of [{n}]")
    win, tie = _outcomes(q[None, :], atoms, tie_tol)
    win, tie = win[0], tie[0]
    in_s = ((subset >> np.arange(n)) & 1).astype(bool)
    # strict wins inside S, strict losses outside S, ties anywhere
    consistent = np.all(~win | in_s, axis=1) & np.all(win | tie | ~in_s, axis=1)
    prob = np.where(consistent, 0.5 ** tie.sum(axis=1), 0.0)
    return float((prob * weights).sum())


def welfare(
    g: SignalingPolicy,
    f: SignalingPolicy,
    utility: UtilityFunction,
    K: int = 512,
    tie_tol: float = DEFAULT_TIE_TOL,
) -> float:
    """Sum of both senders' expected payoffs after discretization."""
    wg, pg = discretize_arrays(g, K)
    if g == f:
        return 2.0 * float(wg @ payoff_at_points(pg, (wg, pg), utility, tie_tol))
    wf, pf = discretize_arrays(f, K)
    return float(
        wg @ payoff_at_points(pg, (wf, pf), utility, tie_tol)
        + wf @ payoff_at_points(pf, (wg, pg), utility, tie_tol)
    )


def mean_payoff(
    g: SignalingPolicy | AtomArrays,
    f: SignalingPolicy | AtomArrays,
    utility: UtilityFunction,
    tie_tol: float = DEFAULT_TIE_TOL,
) -> float:
    """E_{q~g}[Pi(q, f)] for atomic g and f."""
    wg, pg = as_atom_arrays(g)
    return float(wg @ payoff_at_points(pg, f, utility, tie_tol))
