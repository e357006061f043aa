"""
Belief distributions, evidence and the extended mass carried through ER folds.
"""
import math
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Dict, Iterator, Mapping, Tuple, Union

from src.errors import ValidationFailure
from src.evidence.frame import RESIDUAL, Frame, LabelOrSubset, Proposition

SUM_TOLERANCE = 1e-9

MassInput = Mapping[Union[Proposition, LabelOrSubset], float]


def _freeze(masses: Dict[Proposition, float]) -> Mapping[Proposition, float]:
    return MappingProxyType(dict(sorted(masses.items())))


def _resolve_keys(frame: Frame, masses: MassInput) -> Dict[Proposition, float]:
    resolved: Dict[Proposition, float] = {}
    for key, value in masses.items():
        mask = key if isinstance(key, int) else frame.subset(key)
        resolved[mask] = resolved.get(mask, 0.0) + float(value)
    return resolved


@dataclass(frozen=True)
class BeliefDistribution:
    """
    Probability masses over non-empty subsets of a frame.

    Only focal elements (mass > 0) are stored. Keys are bitmasks; use
    from_labels() to build one from hypothesis labels.
    """

    frame: Frame
    masses: Mapping[Proposition, float]

    def __post_init__(self):
        cleaned: Dict[Proposition, float] = {}
        for mask, value in self.masses.items():
            if not self.frame.contains(mask):
                raise ValidationFailure("mass assigned outside the frame or to the empty set", value=mask)
            if math.isnan(value) or value < 0.0 or value > 1.0 + SUM_TOLERANCE:
                raise ValidationFailure("belief must lie in [0, 1]", value=value)
            if value > 0.0:
                cleaned[mask] = min(float(value), 1.0)
        total = math.fsum(cleaned.values())
        if abs(total - 1.0) > SUM_TOLERANCE:
            raise ValidationFailure("beliefs must sum to 1", value=round(total, 12))
        object.__setattr__(self, "masses", _freeze(cleaned))

    @classmethod
    def from_labels(cls, frame: Frame, masses: MassInput) -> "BeliefDistribution":
        return cls(frame, _resolve_keys(frame, masses))

    def mass(self, proposition: Union[Proposition, LabelOrSubset]) -> float:
        mask = proposition if isinstance(proposition, int) else self.frame.subset(proposition)
        return self.masses.get(mask, 0.0)

    def probability(self, label: str) -> float:
        """Mass assigned exactly to the singleton hypothesis `label`."""
        return self.masses.get(self.frame.singleton(label), 0.0)

    def is_singleton_only(self) -> bool:
        return all(mask & (mask - 1) == 0 for mask in self.masses)

    def as_label_dict(self) -> Dict[str, float]:
        return {self.frame.describe(mask): value for mask, value in self.masses.items()}

    def singleton_vector(self) -> Tuple[float, ...]:
        return tuple(self.masses.get(mask, 0.0) for mask in self.frame.singletons())


@dataclass(frozen=True)
class Evidence:
    """A belief distribution with the weight and reliability of its source."""

    bd: BeliefDistribution
    weight: float
    reliability: float

    def __post_init__(self):
        for name in ("weight", "reliability"):
            value = getattr(self, name)
            if math.isnan(value) or not 0.0 <= value <= 1.0:
                raise ValidationFailure(f"evidence {name} must lie in [0, 1]", value=value)

    @property
    def frame(self) -> Frame:
        return self.bd.frame


@dataclass(frozen=True)
class ExtendedMass:
    """
    Unnormalized masses over in-frame propositions plus the RESIDUAL entry.

    An all-zero mass is only legal when total_conflict is set: it is the
    state left behind when fully reliable evidence contradicts itself.
    """

    frame: Frame
    masses: Mapping[Proposition, float]
    residual: float = 0.0
    total_conflict: bool = field(default=False)

    def __post_init__(self):
        cleaned: Dict[Proposition, float] = {}
        for mask, value in self.masses.items():
            if not self.frame.contains(mask):
                raise ValidationFailure("mass assigned outside the frame or to the empty set", value=mask)
            if math.isnan(value) or value < 0.0:
                raise ValidationFailure("masses must be non-negative", value=value)
            if value > 0.0:
                cleaned[mask] = float(value)
        if math.isnan(self.residual) or self.residual < 0.0:
            raise ValidationFailure("residual mass must be non-negative", value=self.residual)
        if not cleaned and self.residual == 0.0 and not self.total_conflict:
            raise ValidationFailure("extended mass is all zero without being flagged as total conflict")
        object.__setattr__(self, "masses", _freeze(cleaned))
        object.__setattr__(self, "residual", float(self.residual))

    @classmethod
    def vacuous(cls, frame: Frame) -> "ExtendedMass":
        return cls(frame, {}, residual=1.0)

    def items(self) -> Iterator[Tuple[Proposition, float]]:
        """In-frame entries followed by the RESIDUAL entry."""
        yield from self.masses.items()
        yield RESIDUAL, self.residual

    def mass(self, proposition: Union[Proposition, LabelOrSubset]) -> float:
        if proposition == RESIDUAL:
            return self.residual
        mask = proposition if isinstance(proposition, int) else self.frame.subset(proposition)
        return self.masses.get(mask, 0.0)

    def in_frame_total(self) -> float:
        return math.fsum(self.masses.values())


@dataclass(frozen=True)
class PriorEvidence(BeliefDistribution):
    """
    A prior over singleton hypotheses.

    The conditioning information behind it is the historical dataset the
    prior was read from; it is not represented any further here.
    """

    def __post_init__(self):
        super().__post_init__()
        if not self.is_singleton_only():
            raise ValidationFailure("prior evidence may only assign mass to singleton hypotheses")

    @classmethod
    def uniform(cls, frame: Frame) -> "PriorEvidence":
        share = 1.0 / frame.size
        return cls(frame, {mask: share for mask in frame.singletons()})
