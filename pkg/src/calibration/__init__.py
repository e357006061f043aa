from src.calibration.tables import (
    BeliefMatrix,
    CountTable,
    HistoryRecord,
    LikelihoodMatrix,
    beliefs_from_likelihoods,
    calibrate,
    canonical_grade,
    grade_to_bd,
    likelihoods,
    records_from_counts,
    round_half_up,
    tally,
)

__all__ = [
    "BeliefMatrix",
    "CountTable",
    "HistoryRecord",
    "LikelihoodMatrix",
    "beliefs_from_likelihoods",
    "calibrate",
    "canonical_grade",
    "grade_to_bd",
    "likelihoods",
    "records_from_counts",
    "round_half_up",
    "tally",
]
