"""Small value types shared across modules."""

from dataclasses import dataclass, field
from enum import Enum


class Limit(str, Enum):
    ZERO = "TendsToZero"
    INFINITY = "TendsToInfinity"
    POSITIVE_CONST = "TendsToPositiveConst"
    NO_LIMIT_BOUNDED = "NoLimitBounded"
    INCONCLUSIVE = "Inconclusive"
    NOT_PREDICTED = "NotPredicted"

    def __str__(self):
        return self.value


class Verdict(str, Enum):
    ASYMPTOTICALLY_STABLE = "AsymptoticallyStable"
    STABLE = "Stable"
    UNSTABLE = "Unstable"
    INCONCLUSIVE = "Inconclusive"

    def __str__(self):
        return self.value


class Provenance(str, Enum):
    TORSION = "torsion-theorem"
    CURVATURE = "curvature-theorem"
    EIGENVALUE = "eigenvalue-oracle"

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class StabilityVerdict:
    verdict: Verdict
    provenance: Provenance
    notes: tuple = field(default_factory=tuple)

    def to_dict(self):
        return {"verdict": self.verdict.value, "provenance": self.provenance.value, "notes": list(self.notes)}


@dataclass(frozen=True)
class LimitPrediction:
    label: Limit
    value: float = None
    applicable: bool = True
    reason: str = ""

    def __post_init__(self):
        if self.value is not None and self.label is not Limit.POSITIVE_CONST:
            raise ValueError("a limit value is only meaningful for a positive constant limit")

    def to_dict(self):
        return {"class": self.label.value, "value": self.value, "applicable": self.applicable, "reason": self.reason}
