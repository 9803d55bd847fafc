from __future__ import annotations

import math
from enum import Enum
from typing import Dict, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


MIN_WEIGHT = 1e-12
WEIGHT_SUM_TOL = 1e-12
COORD_TOL = 1e-12
MAX_GENERAL_N = 16

Point = Tuple[float, ...]


def _clean_point(values: Sequence[float]) -> Point:
    point = tuple(float(x) for x in values)
    if not point:
        raise ValueError("point must have at least one coordinate")
    for x in point:
        if not math.isfinite(x) or x < -COORD_TOL or x > 1.0 + COORD_TOL:
            raise ValueError(f"coordinate {x!r} outside [0, 1]")
    return tuple(min(1.0, max(0.0, x)) for x in point)


def _check_weight(w: float) -> float:
    w = float(w)
    if not math.isfinite(w) or w < MIN_WEIGHT:
        raise ValueError(f"weight {w!r} below {MIN_WEIGHT}")
    return w


class Prior(BaseModel):
    model_config = ConfigDict(frozen=True)

    lam: float = Field(gt=0.0, lt=1.0)


class UtilityKind(str, Enum):
    ANONYMOUS = "anonymous"
    GENERAL = "general"


class UtilityFunction(BaseModel):
    """Set function V over receiver subsets, indexed by bitmask.

    Anonymous utilities store v(0..n); general ones store the dense table
    V[mask] for all 2^n masks.
    """

    model_config = ConfigDict(frozen=True)

    n: int = Field(ge=1)
    kind: UtilityKind
    anonymous_values: Optional[Tuple[float, ...]] = None
    general_values: Optional[Tuple[float, ...]] = None

    @model_validator(mode="after")
    def check_tables(self) -> "UtilityFunction":
        if self.kind is UtilityKind.ANONYMOUS:
            if self.anonymous_values is None or self.general_values is not None:
                raise ValueError("anonymous utility needs anonymous_values only")
            if len(self.anonymous_values) != self.n + 1:
                raise ValueError(
                    f"dimension mismatch: n={self.n} needs {self.n + 1} values, "
                    f"got {len(self.anonymous_values)}"
                )
            values = self.anonymous_values
        else:
            if self.general_values is None or self.anonymous_values is not None:
                raise ValueError("general utility needs general_values only")
            if self.n > MAX_GENERAL_N:
                raise ValueError(f"general utilities support n <= {MAX_GENERAL_N}")
            if len(self.general_values) != 1 << self.n:
                raise ValueError(
                    f"dimension mismatch: n={self.n} needs {1 << self.n} values, "
                    f"got {len(self.general_values)}"
                )
            values = self.general_values
        if not all(math.isfinite(x) for x in values):
            raise ValueError("utility values must be finite")
        return self

    # Constructors
    @classmethod
    def anonymous(cls, values: Sequence[float]) -> "UtilityFunction":
        vals = tuple(float(x) for x in values)
        return cls(n=len(vals) - 1, kind=UtilityKind.ANONYMOUS, anonymous_values=vals)

    @classmethod
    def general(cls, n: int, table: Sequence[float] | Dict[int, float]) -> "UtilityFunction":
        if isinstance(table, dict):
            missing = [m for m in range(1 << n) if m not in table]
            if missing:
                raise ValueError(f"dimension mismatch: missing subsets {missing[:4]}")
            table = [table[m] for m in range(1 << n)]
        return cls(n=n, kind=UtilityKind.GENERAL, general_values=tuple(float(x) for x in table))

    @classmethod
    def additive(cls, n: int, unit: float = 1.0) -> "UtilityFunction":
        return cls.anonymous([unit * k for k in range(n + 1)])

    @classmethod
    def power(cls, n: int, tau: float) -> "UtilityFunction":
        if tau <= 0:
            raise ValueError("power utility needs tau > 0")
        return cls.anonymous([float(k) ** tau for k in range(n + 1)])

    @classmethod
    def two_receiver(cls, rho: float, r: float = 1.0) -> "UtilityFunction":
        return cls.anonymous([0.0, rho * r, r])

    @classmethod
    def constant(cls, n: int, level: float = 1.0) -> "UtilityFunction":
        return cls.anonymous([0.0] + [level] * n)

    # Queries
    @property
    def is_anonymous(self) -> bool:
        return self.kind is UtilityKind.ANONYMOUS

    def v(self, k: int) -> float:
        if not self.is_anonymous:
            raise ValueError("v(k) is only defined for anonymous utilities")
        return self.anonymous_values[k]

    def value(self, mask: int) -> float:
        if mask < 0 or mask >= 1 << self.n:
            raise ValueError(f"subset mask {mask} is not a subset of [{self.n}]")
        if self.is_anonymous:
            return self.anonymous_values[mask.bit_count()]
        return self.general_values[mask]

    def table(self) -> np.ndarray:
        if self.is_anonymous:
            if self.n > MAX_GENERAL_N:
                raise ValueError(f"subset table needs n <= {MAX_GENERAL_N}")
            counts = np.array([m.bit_count() for m in range(1 << self.n)])
            return np.asarray(self.anonymous_values, dtype=float)[counts]
        return np.asarray(self.general_values, dtype=float)

    @property
    def vmax(self) -> float:
        values = self.anonymous_values if self.is_anonymous else self.general_values
        return float(max(values))

    def _second_differences(self) -> np.ndarray:
        if not self.is_anonymous:
            raise ValueError("curvature classes are defined for anonymous utilities")
        return np.diff(np.asarray(self.anonymous_values, dtype=float), n=2)

    def is_supermodular(self, strict: bool = True, tol: float = 1e-12) -> bool:
        d2 = self._second_differences()
        if strict:
            return d2.size > 0 and bool(np.all(d2 > tol))
        return bool(np.all(d2 >= -tol))

    def is_submodular(self, strict: bool = True, tol: float = 1e-12) -> bool:
        d2 = self._second_differences()
        if strict:
            return d2.size > 0 and bool(np.all(d2 < -tol))
        return bool(np.all(d2 <= tol))

    def is_additive(self, tol: float = 1e-12) -> bool:
        if not self.is_anonymous:
            table = self.table()
            singles = [table[1 << j] for j in range(self.n)]
            return all(
                abs(table[m] - sum(singles[j] for j in range(self.n) if m >> j & 1)) <= tol
                for m in range(1 << self.n)
            )
        return self.anonymous_values[0] == 0.0 and bool(
            np.all(np.abs(self._second_differences()) <= tol)
        )


class Atom(BaseModel):
    model_config = ConfigDict(frozen=True)

    weight: float
    point: Point

    @field_validator("weight")
    @classmethod
    def valid_weight(cls, w: float) -> float:
        return _check_weight(w)

    @field_validator("point", mode="before")
    @classmethod
    def valid_point(cls, p: Sequence[float]) -> Point:
        return _clean_point(p)

    @property
    def dim(self) -> int:
        return len(self.point)


class Segment(BaseModel):
    """Uniform mass along the affine path start + t (end - start), t in [0, 1]."""

    model_config = ConfigDict(frozen=True)

    weight: float
    start: Point
    end: Point

    @field_validator("weight")
    @classmethod
    def valid_weight(cls, w: float) -> float:
        return _check_weight(w)

    @field_validator("start", "end", mode="before")
    @classmethod
    def valid_end(cls, p: Sequence[float]) -> Point:
        return _clean_point(p)

    @model_validator(mode="after")
    def check_ends(self) -> "Segment":
        if len(self.start) != len(self.end):
            raise ValueError("segment endpoints differ in dimension")
        if self.start == self.end:
            raise ValueError("segment endpoints must differ")
        return self

    @property
    def dim(self) -> int:
        return len(self.start)

    @property
    def midpoint(self) -> Point:
        return tuple((a + b) / 2.0 for a, b in zip(self.start, self.end))

    def point_at(self, t: float) -> Point:
        return tuple(a + t * (b - a) for a, b in zip(self.start, self.end))


class SignalingPolicy(BaseModel):
    """Mixture of point masses and uniform segments in posterior space [0,1]^n."""

    model_config = ConfigDict(frozen=True)

    n: int = Field(ge=1)
    atoms: Tuple[Atom, ...] = ()
    segments: Tuple[Segment, ...] = ()

    @model_validator(mode="after")
    def check_mass(self) -> "SignalingPolicy":
        if not self.atoms and not self.segments:
            raise ValueError("policy carries no mass")
        for piece in (*self.atoms, *self.segments):
            if piece.dim != self.n:
                raise ValueError(f"piece of dimension {piece.dim} in a policy of dimension {self.n}")
        total = self.total_weight
        if abs(total - 1.0) > WEIGHT_SUM_TOL:
            raise ValueError(f"weights sum to {total!r}, expected 1")
        return self

    @property
    def total_weight(self) -> float:
        return math.fsum([a.weight for a in self.atoms] + [s.weight for s in self.segments])

    @property
    def is_atomic(self) -> bool:
        return not self.segments

    def marginal_means(self) -> np.ndarray:
        means = np.zeros(self.n)
        for a in self.atoms:
            means += a.weight * np.asarray(a.point)
        for s in self.segments:
            means += s.weight * np.asarray(s.midpoint)
        return means

    def atom_arrays(self) -> Tuple[np.ndarray, np.ndarray]:
        """Weights (k,) and points (k, n) of an atomic policy."""
        if self.segments:
            raise ValueError("policy has segments; discretize it first")
        weights = np.array([a.weight for a in self.atoms], dtype=float)
        points = np.array([a.point for a in self.atoms], dtype=float).reshape(-1, self.n)
        return weights, points

    @classmethod
    def from_arrays(cls, weights: Sequence[float], points: np.ndarray) -> "SignalingPolicy":
        points = np.asarray(points, dtype=float)
        atoms = tuple(Atom(weight=float(w), point=tuple(p)) for w, p in zip(weights, points))
        return cls(n=points.shape[1], atoms=atoms)


class Grid(BaseModel):
    model_config = ConfigDict(frozen=True)

    n: int = Field(ge=1)
    points_per_axis: int = Field(ge=2)

    @property
    def step(self) -> float:
        return 1.0 / (self.points_per_axis - 1)

    @property
    def size(self) -> int:
        return self.points_per_axis ** self.n

    def axis(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.points_per_axis)

    def points(self) -> np.ndarray:
        mesh = np.meshgrid(*([self.axis()] * self.n), indexing="ij")
        return np.stack(mesh, axis=-1).reshape(-1, self.n)


class HyperplaneCertificate(BaseModel):
    """Supporting hyperplane q -> alpha . q + beta over the payoff function."""

    model_config = ConfigDict(frozen=True)

    alpha: Tuple[float, ...]
    beta: float

    @property
    def alpha_min(self) -> float:
        return min(self.alpha)

    def evaluate(self, points: np.ndarray) -> np.ndarray:
        points = np.atleast_2d(np.asarray(points, dtype=float))
        return points @ np.asarray(self.alpha) + self.beta

    def is_nonnegative(self, tol: float = 1e-9) -> bool:
        return self.alpha_min >= -tol and self.beta >= -tol


class IndependentPolicy(BaseModel):
    """Product of one-dimensional marginals, one per receiver."""

    model_config = ConfigDict(frozen=True)

    marginals: Tuple[SignalingPolicy, ...]

    @model_validator(mode="after")
    def check_marginals(self) -> "IndependentPolicy":
        if not self.marginals or any(m.n != 1 for m in self.marginals):
            raise ValueError("independent policy needs one-dimensional marginals")
        return self

    @property
    def n(self) -> int:
        return len(self.marginals)

    def marginal(self, j: int) -> SignalingPolicy:
        return self.marginals[j]

    def joint(self, K: int) -> SignalingPolicy:
        """Discretized product of the marginals as one atomic policy."""
        from persuasion.service.policy_service import product_policy

        return product_policy(self, K)


# Parameter records of the closed-form families


class SupLargePriorParams(BaseModel):
    model_config = ConfigDict(frozen=True)

    lam: float
    rho: float
    r: float
    mu_s: float
    p_hat: float
    alpha: float
    beta: float = 0.0
    quadratic_residual: float


class SubLargePriorParams(BaseModel):
    model_config = ConfigDict(frozen=True)

    lam: float
    rho: float
    r: float
    mu: float
    ell: float
    p_hat: float
    alpha: float
    beta: float


class MultiReceiverScalars(BaseModel):
    model_config = ConfigDict(frozen=True)

    n: int
    T_full: float
    R: float
    T_half: Optional[float] = None
    T_bar: Optional[float] = None
    S: Optional[float] = None


class SupMultiParams(BaseModel):
    model_config = ConfigDict(frozen=True)

    lam: float
    n: int
    mu: float
    p_hat: float
    alpha: float
    T_full: float
    R: float
    quadratic_residual: float


class SubMultiEvenParams(BaseModel):
    model_config = ConfigDict(frozen=True)

    lam: float
    n: int
    mu: float
    ell: float
    p_hat: float
    alpha: float
    beta: float
    T_half: float
    T_bar: float
    S: float


class SubMultiOddParams(BaseModel):
    model_config = ConfigDict(frozen=True)

    lam: float
    n: int
    mu1: float
    mu2: float
    ell1: float
    ell2: float
    p_hat1: float
    p_hat2: float
    alpha1: float
    alpha2: float
    beta: float
    residuals: Tuple[float, ...]
    residual_norm: float
    iterations: int
    converged: bool
