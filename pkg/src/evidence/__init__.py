from src.evidence.bayes import bayes_posterior
from src.evidence.belief import BeliefDistribution, Evidence, ExtendedMass, PriorEvidence
from src.evidence.er_rule import (
    DISCOUNTING_RULES,
    ER,
    SHAFER,
    combine,
    dempster_combine,
    discount,
    fold,
    normalize,
    orthogonal_sum,
    shafer_discount,
)
from src.evidence.frame import EMPTY, RESIDUAL, Frame, intersect, make_frame

__all__ = [
    "BeliefDistribution",
    "DISCOUNTING_RULES",
    "EMPTY",
    "ER",
    "Evidence",
    "ExtendedMass",
    "Frame",
    "PriorEvidence",
    "RESIDUAL",
    "SHAFER",
    "bayes_posterior",
    "combine",
    "dempster_combine",
    "discount",
    "fold",
    "intersect",
    "make_frame",
    "normalize",
    "orthogonal_sum",
    "shafer_discount",
]
