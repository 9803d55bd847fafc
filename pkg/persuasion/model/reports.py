from __future__ import annotations

from enum import Enum
from typing import Dict, List, Optional, Tuple, Union

from pydantic import BaseModel, ConfigDict

from persuasion.model.schemas import (
    HyperplaneCertificate,
    IndependentPolicy,
    Prior,
    SignalingPolicy,
    SubLargePriorParams,
    SubMultiEvenParams,
    SubMultiOddParams,
    SupLargePriorParams,
    SupMultiParams,
    UtilityFunction,
)


FamilyParams = Union[
    SupLargePriorParams,
    SubLargePriorParams,
    SupMultiParams,
    SubMultiEvenParams,
    SubMultiOddParams,
]


class ConditionKind(str, Enum):
    EQUALITY = "equality"
    INEQUALITY = "inequality"  # lhs <= rhs


class ConditionCheck(BaseModel):
    model_config = ConfigDict(frozen=True)

    name: str
    kind: ConditionKind
    lhs: float
    rhs: float

    @property
    def violation(self) -> float:
        if self.kind is ConditionKind.EQUALITY:
            return abs(self.lhs - self.rhs)
        return max(0.0, self.lhs - self.rhs)

    def holds(self, tol: float = 1e-9) -> bool:
        return self.violation <= tol

    @classmethod
    def equality(cls, name: str, lhs: float, rhs: float) -> "ConditionCheck":
        return cls(name=name, kind=ConditionKind.EQUALITY, lhs=float(lhs), rhs=float(rhs))

    @classmethod
    def at_most(cls, name: str, lhs: float, rhs: float) -> "ConditionCheck":
        return cls(name=name, kind=ConditionKind.INEQUALITY, lhs=float(lhs), rhs=float(rhs))


class EquilibriumConstruction(BaseModel):
    """A closed-form symmetric equilibrium candidate and its own certificate."""

    model_config = ConfigDict(frozen=True)

    family: str
    policy: SignalingPolicy
    params: Dict[str, float]
    record: Optional[FamilyParams] = None
    certificate: Optional[HyperplaneCertificate] = None
    closed_form_welfare: Optional[float] = None
    conditions: Tuple[ConditionCheck, ...] = ()

    @property
    def max_violation(self) -> float:
        return max((c.violation for c in self.conditions), default=0.0)

    def all_conditions_hold(self, tol: float = 1e-9) -> bool:
        return all(c.holds(tol) for c in self.conditions)

    def failed_conditions(self, tol: float = 1e-9) -> List[str]:
        return [c.name for c in self.conditions if not c.holds(tol)]


class IndependentConstruction(BaseModel):
    model_config = ConfigDict(frozen=True)

    policy: IndependentPolicy
    closed_form_welfare: float
    marginal_payoff: float  # per-receiver equilibrium payoff in units of v(1)


class ExampleFixture(BaseModel):
    """A named worked example: its policy together with the instance it lives in."""

    model_config = ConfigDict(frozen=True)

    id: str
    policy: SignalingPolicy
    prior: Prior
    utility: UtilityFunction
    certificate: Optional[HyperplaneCertificate] = None


class UtilityViolation(BaseModel):
    model_config = ConfigDict(frozen=True)

    property: str
    subset: int
    superset: Optional[int] = None
    detail: str = ""


class UtilityReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    violations: Tuple[UtilityViolation, ...] = ()
    strictly_monotone: bool
    supermodular: Optional[bool] = None
    submodular: Optional[bool] = None
    strictly_supermodular: Optional[bool] = None
    strictly_submodular: Optional[bool] = None

    @property
    def is_valid(self) -> bool:
        return not self.violations


class BestResponseResult(BaseModel):
    model_config = ConfigDict(frozen=True)

    policy: SignalingPolicy
    value: float
    certificate: HyperplaneCertificate
    envelope_violation: float
    support_slack: float
    iterations: int
    duality_gap: float


class DiagnosticFlag(BaseModel):
    model_config = ConfigDict(frozen=True)

    name: str
    raised: Optional[bool]  # None when the necessary condition does not apply
    condition: str
    detail: str = ""


class StructuralDiagnostics(BaseModel):
    model_config = ConfigDict(frozen=True)

    flags: Tuple[DiagnosticFlag, ...]

    def flag(self, name: str) -> DiagnosticFlag:
        for f in self.flags:
            if f.name == name:
                return f
        raise KeyError(name)

    @property
    def all_clear(self) -> bool:
        return not any(f.raised for f in self.flags)


class EquilibriumReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    payoff_vs_self: float
    best_response_value: float
    gap: float
    tolerance: float
    is_equilibrium: bool
    certificate: HyperplaneCertificate
    max_envelope_violation: float
    support_slack: float
    closed_form_envelope_violation: Optional[float] = None
    certificate_disagreement: Optional[float] = None
    red_alert: bool = False
    diagnostics: StructuralDiagnostics
    grid_points_per_axis: int
    K: int
    atoms: int

    def render(self) -> str:
        lines = [
            f"payoff_vs_self        {self.payoff_vs_self:.12g}",
            f"best_response_value   {self.best_response_value:.12g}",
            f"gap                   {self.gap:.12g}",
            f"tolerance             {self.tolerance:.12g}",
            f"equilibrium           {'yes' if self.is_equilibrium else 'no'}",
            f"certificate alpha     {', '.join(f'{a:.12g}' for a in self.certificate.alpha)}",
            f"certificate beta      {self.certificate.beta:.12g}",
            f"envelope_violation    {self.max_envelope_violation:.12g}",
            f"support_slack         {self.support_slack:.12g}",
        ]
        if self.closed_form_envelope_violation is not None:
            lines.append(f"closed_form_envelope  {self.closed_form_envelope_violation:.12g}")
        if self.red_alert:
            lines.append("RED ALERT             closed-form certificate disagrees with the LP")
        for f in self.diagnostics.flags:
            state = "n/a" if f.raised is None else ("RAISED" if f.raised else "clear")
            lines.append(f"diagnostic {f.name:<28} {state}  ({f.condition})")
        lines.append(f"grid {self.grid_points_per_axis} points/axis, K={self.K}, {self.atoms} atoms")
        return "\n".join(lines)


class OptimalWelfare(BaseModel):
    model_config = ConfigDict(frozen=True)

    value: float
    split: int  # bitmask of receivers assigned to the first sender


class PoSResult(BaseModel):
    model_config = ConfigDict(frozen=True)

    family: str
    lam: float
    parameter: Optional[float]
    n: int
    mu: Optional[float]
    optimal_welfare: float
    equilibrium_welfare: float
    ratio: float
    closed_form_bound: Optional[float] = None


class FeasibleInterval(BaseModel):
    model_config = ConfigDict(frozen=True)

    lower: float
    upper: float
    closed_form_lower: Optional[float] = None
    closed_form_upper: Optional[float] = None
    endpoint_violation: float = 0.0

    def contains(self, mu: float, tol: float = 1e-9) -> bool:
        return self.lower - tol <= mu <= self.upper + tol


class InfeasibilityProbe(BaseModel):
    model_config = ConfigDict(frozen=True)

    certifiable: bool
    violated_condition: Optional[str] = None
    mu: Optional[float] = None
    p_hat: Optional[float] = None
    alpha: Optional[float] = None
    beta: Optional[float] = None
    conditions: Tuple[ConditionCheck, ...] = ()


class IntroGameTable(BaseModel):
    """Sender-1 payoffs of the full/null strategy pairs."""

    model_config = ConfigDict(frozen=True)

    payoffs: Dict[str, float]
    equilibria: List[str]
