from src.reliability.confusion import (
    DEFAULT_FUND_GRADES,
    DEFAULT_FUNDED_LABEL,
    EXPERT_WIDE,
    ConfusionMatrix,
    Recommendation,
    ReliabilityOverrides,
    ReliabilityProfile,
    accuracy,
    confusion_from_history,
    profile_experts,
    rates,
    recognition_rates,
    recommendation_of,
    reliability_for,
    resolve_reliability,
)

__all__ = [
    "DEFAULT_FUND_GRADES",
    "DEFAULT_FUNDED_LABEL",
    "EXPERT_WIDE",
    "ConfusionMatrix",
    "Recommendation",
    "ReliabilityOverrides",
    "ReliabilityProfile",
    "accuracy",
    "confusion_from_history",
    "profile_experts",
    "rates",
    "recognition_rates",
    "recommendation_of",
    "reliability_for",
    "resolve_reliability",
]
