from src.validation.schemas import AssessmentRow, HistoryRow, OutcomeRow, ReliabilityRow
from src.validation.validator import clear_rejected_rows, get_rejected_rows, validate_row

__all__ = [
    "AssessmentRow",
    "HistoryRow",
    "OutcomeRow",
    "ReliabilityRow",
    "clear_rejected_rows",
    "get_rejected_rows",
    "validate_row",
]
