"""
CSV readers for history, assessments, reliability overrides and outcomes.

Every file is UTF-8, comma separated, with a header row. Line numbers in
errors count the header as line 1.
"""
from pathlib import Path
from typing import Dict, Iterator, List, Sequence, Tuple, Type

import pandas as pd
from pydantic import BaseModel

from src.aggregation.pipeline import Assessment
from src.calibration.tables import HistoryRecord, canonical_grade
from src.cli.config import PipelineConfig
from src.errors import ValidationFailure
from src.observability import log_event
from src.reliability.confusion import EXPERT_WIDE, ReliabilityOverrides, ReliabilityProfile
from src.validation.schemas import AssessmentRow, HistoryRow, OutcomeRow, ReliabilityRow
from src.validation.validator import validate_row

HISTORY_COLUMNS = ("project_id", "expert_id", "criterion_id", "grade", "outcome")
ASSESSMENT_COLUMNS = ("project_id", "expert_id", "criterion_id", "grade")
RELIABILITY_COLUMNS = ("project_id", "expert_id", "reliability")
OUTCOME_COLUMNS = ("project_id", "outcome")


def _load_frame(path: str, columns: Sequence[str]) -> pd.DataFrame:
    file = Path(path)
    if not file.is_file():
        raise ValidationFailure("file not found", path=str(path))
    try:
        frame = pd.read_csv(file, dtype=str, keep_default_na=False, encoding="utf-8", skipinitialspace=True)
    except pd.errors.EmptyDataError:
        raise ValidationFailure("file is empty, expected a header row", path=str(path), line=1) from None
    except (pd.errors.ParserError, UnicodeDecodeError) as exc:
        raise ValidationFailure(f"cannot parse CSV: {exc}", path=str(path)) from None
    frame.columns = [str(c).strip() for c in frame.columns]
    missing = [c for c in columns if c not in frame.columns]
    if missing:
        raise ValidationFailure(f"missing column(s), expected header {','.join(columns)}", path=str(path), line=1, value=missing)
    if frame.empty:
        raise ValidationFailure("file is empty, no data rows after the header", path=str(path), line=1)
    return frame


def _rows(path: str, columns: Sequence[str], schema: Type[BaseModel]) -> Iterator[Tuple[int, BaseModel]]:
    frame = _load_frame(path, columns)
    for index, record in enumerate(frame[list(columns)].to_dict(orient="records")):
        line = index + 2
        yield line, validate_row(schema, record, path=str(path), line=line)


def _criterion_grade(config: PipelineConfig, criterion_id: str, grade: str, path: str, line: int) -> str:
    try:
        criterion = config.criterion(criterion_id)
        return canonical_grade(criterion.grades, grade)
    except ValidationFailure as exc:
        raise ValidationFailure(exc.message, path=path, line=line, value=exc.value) from None


def parse_history(path: str, config: PipelineConfig) -> List[HistoryRecord]:
    records: List[HistoryRecord] = []
    for line, row in _rows(path, HISTORY_COLUMNS, HistoryRow):
        grade = _criterion_grade(config, row.criterion_id, row.grade, path, line)
        if row.outcome not in config.frame:
            raise ValidationFailure(f"unknown outcome, expected one of {config.frame}", path=path, line=line, value=row.outcome)
        records.append(HistoryRecord(row.project_id, row.expert_id, row.criterion_id, grade, row.outcome, line=line))
    log_event("history_loaded", path=str(path), records=len(records))
    return records


def parse_assessments(path: str, config: PipelineConfig) -> List[Assessment]:
    assessments: List[Assessment] = []
    seen: Dict[Tuple[str, str, str], int] = {}
    for line, row in _rows(path, ASSESSMENT_COLUMNS, AssessmentRow):
        key = (row.project_id, row.expert_id, row.criterion_id)
        if key in seen:
            raise ValidationFailure(
                f"duplicate assessment, first given on line {seen[key]}",
                path=path,
                line=line,
                value="/".join(key),
            )
        seen[key] = line
        grade = _criterion_grade(config, row.criterion_id, row.grade, path, line)
        assessments.append(Assessment(row.project_id, row.expert_id, row.criterion_id, grade, line=line))
    log_event(
        "assessments_loaded",
        path=str(path),
        assessments=len(assessments),
        projects=len({a.project_id for a in assessments}),
    )
    return assessments


def parse_reliability_overrides(path: str) -> ReliabilityOverrides:
    """project_id '*' sets one reliability for the expert on every project."""
    per_project: Dict[Tuple[str, str], float] = {}
    expert_wide: Dict[str, ReliabilityProfile] = {}
    for line, row in _rows(path, RELIABILITY_COLUMNS, ReliabilityRow):
        if row.project_id == EXPERT_WIDE:
            if row.expert_id in expert_wide:
                raise ValidationFailure("duplicate expert-wide reliability", path=path, line=line, value=row.expert_id)
            expert_wide[row.expert_id] = ReliabilityProfile.constant(row.expert_id, row.reliability)
            continue
        key = (row.project_id, row.expert_id)
        if key in per_project:
            raise ValidationFailure("duplicate reliability", path=path, line=line, value="/".join(key))
        per_project[key] = row.reliability
    overrides = ReliabilityOverrides(per_project, expert_wide)
    log_event("overrides_loaded", path=str(path), per_project=len(per_project), expert_wide=len(expert_wide))
    return overrides


def parse_outcomes(path: str, config: PipelineConfig) -> Dict[str, str]:
    outcomes: Dict[str, str] = {}
    for line, row in _rows(path, OUTCOME_COLUMNS, OutcomeRow):
        if row.outcome not in config.frame:
            raise ValidationFailure(f"unknown outcome, expected one of {config.frame}", path=path, line=line, value=row.outcome)
        if row.project_id in outcomes:
            raise ValidationFailure("duplicate outcome", path=path, line=line, value=row.project_id)
        outcomes[row.project_id] = row.outcome
    return outcomes
