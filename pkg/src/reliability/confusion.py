"""
Expert reliability from review track records.

An expert's past recommendations are binarized (Fund vs Not fund) and
crossed with actual outcomes in a confusion matrix. The reliability of a new
recommendation is the positive rate TP / (TP + FP) when the expert says Fund
and the negative rate TN / (TN + FN) otherwise. A 0/0 rate is undefined and
resolves to zero reliability.
"""
from collections import defaultdict
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

from src.calibration.tables import HistoryRecord
from src.errors import ValidationFailure
from src.observability import log_event

DEFAULT_FUND_GRADES = ("Fund", "Fund with priority")
DEFAULT_FUNDED_LABEL = "Funded"
EXPERT_WIDE = "*"


class Recommendation(str, Enum):
    FUND = "Fund"
    NOT_FUND = "NotFund"


def recommendation_of(grade: str, fund_grades: Iterable[str] = DEFAULT_FUND_GRADES) -> Recommendation:
    wanted = str(grade).strip().casefold()
    if any(g.strip().casefold() == wanted for g in fund_grades):
        return Recommendation.FUND
    return Recommendation.NOT_FUND


@dataclass(frozen=True)
class ConfusionMatrix:
    """Recommendation (Fund / Not fund) against actual outcome (Funded / Unfunded)."""

    tp: int = 0
    fn: int = 0
    fp: int = 0
    tn: int = 0

    def __post_init__(self):
        for name in ("tp", "fn", "fp", "tn"):
            if getattr(self, name) < 0:
                raise ValidationFailure(f"confusion count {name} must be non-negative", value=getattr(self, name))

    @property
    def total(self) -> int:
        return self.tp + self.fn + self.fp + self.tn

    @property
    def usable(self) -> bool:
        return self.total > 0

    def scaled(self, k: int) -> "ConfusionMatrix":
        return ConfusionMatrix(self.tp * k, self.fn * k, self.fp * k, self.tn * k)


@dataclass(frozen=True)
class ReliabilityProfile:
    """Directional rates for one expert; None marks an undefined 0/0 rate."""

    expert_id: str
    positive_rate: Optional[float]
    negative_rate: Optional[float]
    usable: bool = True
    confusion: Optional[ConfusionMatrix] = field(default=None, compare=False)

    def __post_init__(self):
        for name in ("positive_rate", "negative_rate"):
            value = getattr(self, name)
            if value is not None and not 0.0 <= value <= 1.0:
                raise ValidationFailure(f"{name} must lie in [0, 1]", value=value)

    @classmethod
    def constant(cls, expert_id: str, reliability: float) -> "ReliabilityProfile":
        """Same reliability whichever way the expert recommends."""
        return cls(expert_id, reliability, reliability)


@dataclass(frozen=True)
class ReliabilityOverrides:
    """Reliabilities supplied directly instead of derived from history."""

    per_project: Mapping[Tuple[str, str], float] = field(default_factory=dict)
    expert_wide: Mapping[str, ReliabilityProfile] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.per_project) + len(self.expert_wide)


def _ratio(numerator: int, denominator: int) -> Optional[float]:
    return numerator / denominator if denominator > 0 else None


def confusion_from_history(
    records: Iterable[HistoryRecord],
    expert_id: str,
    fund_grades: Iterable[str] = DEFAULT_FUND_GRADES,
    funded: str = DEFAULT_FUNDED_LABEL,
) -> ConfusionMatrix:
    """Tally one expert's recommendation-criterion history."""
    fund_grades = tuple(fund_grades)
    tp = fn = fp = tn = 0
    for record in records:
        if record.expert_id != expert_id:
            raise ValidationFailure(
                f"history record belongs to expert {record.expert_id!r}, not {expert_id!r}",
                line=record.line,
                value=record.expert_id,
            )
        says_fund = recommendation_of(record.grade, fund_grades) is Recommendation.FUND
        was_funded = record.outcome == funded
        if was_funded and says_fund:
            tp += 1
        elif was_funded:
            fn += 1
        elif says_fund:
            fp += 1
        else:
            tn += 1
    return ConfusionMatrix(tp, fn, fp, tn)


def rates(cm: ConfusionMatrix, expert_id: str = "") -> ReliabilityProfile:
    return ReliabilityProfile(
        expert_id=expert_id,
        positive_rate=_ratio(cm.tp, cm.tp + cm.fp),
        negative_rate=_ratio(cm.tn, cm.tn + cm.fn),
        usable=cm.usable,
        confusion=cm,
    )


def accuracy(cm: ConfusionMatrix) -> Optional[float]:
    return _ratio(cm.tp + cm.tn, cm.total)


def recognition_rates(cm: ConfusionMatrix) -> Tuple[Optional[float], Optional[float]]:
    """Per-outcome recall: (TP / (TP + FN), TN / (TN + FP))."""
    return _ratio(cm.tp, cm.tp + cm.fn), _ratio(cm.tn, cm.tn + cm.fp)


def reliability_for(p: ReliabilityProfile, recommendation: Recommendation) -> float:
    if not p.usable:
        raise ValidationFailure("expert has no usable review history", value=p.expert_id)
    rate = p.positive_rate if recommendation is Recommendation.FUND else p.negative_rate
    return 0.0 if rate is None else rate


def profile_experts(
    records: Iterable[HistoryRecord],
    recommendation_criterion: str,
    fund_grades: Iterable[str] = DEFAULT_FUND_GRADES,
    funded: str = DEFAULT_FUNDED_LABEL,
) -> Dict[str, ReliabilityProfile]:
    """Reliability profile for every expert with recommendation-criterion history."""
    fund_grades = tuple(fund_grades)
    by_expert: Dict[str, List[HistoryRecord]] = defaultdict(list)
    for record in records:
        if record.criterion_id == recommendation_criterion:
            by_expert[record.expert_id].append(record)
    profiles = {
        expert_id: rates(confusion_from_history(history, expert_id, fund_grades, funded), expert_id)
        for expert_id, history in sorted(by_expert.items())
    }
    log_event(
        "reliability_profiled",
        experts=len(profiles),
        criterion=recommendation_criterion,
        unusable=sum(1 for p in profiles.values() if not p.usable),
    )
    return profiles


def resolve_reliability(
    project_id: str,
    expert_id: str,
    recommendation_grade: Optional[str],
    overrides: Optional[ReliabilityOverrides] = None,
    profiles: Optional[Mapping[str, ReliabilityProfile]] = None,
    default: Optional[float] = None,
    fund_grades: Sequence[str] = DEFAULT_FUND_GRADES,
) -> float:
    """
    Reliability of one expert on one project.

    Order: per-project override, expert-wide override, history profile
    (direction from the recommendation grade), then the default. A default
    of None means unknown experts are an error.
    """
    overrides = overrides or ReliabilityOverrides()
    if (project_id, expert_id) in overrides.per_project:
        return overrides.per_project[(project_id, expert_id)]

    profile = overrides.expert_wide.get(expert_id)
    if profile is None and profiles is not None:
        profile = profiles.get(expert_id)
    if profile is not None and profile.usable:
        if recommendation_grade is not None:
            return reliability_for(profile, recommendation_of(recommendation_grade, fund_grades))
        if profile.positive_rate is not None and profile.positive_rate == profile.negative_rate:
            return profile.positive_rate
        # no recommendation on this project: direction unknown, use the default
        if default is None:
            raise ValidationFailure(
                f"expert {expert_id!r} gave no recommendation on project {project_id!r}; reliability direction unknown",
                value=expert_id,
            )
        return default

    if default is None:
        raise ValidationFailure(
            f"no reliability for expert {expert_id!r} on project {project_id!r}",
            value=expert_id,
        )
    return default
