from typing import Any, Dict

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


class _Row(BaseModel):
    """Base for one CSV row; unknown columns are ignored."""

    model_config = ConfigDict(extra="ignore", frozen=True)

    @model_validator(mode="before")
    @classmethod
    def preprocess_input(cls, data: Any):
        if not isinstance(data, dict):
            return data
        cleaned: Dict[str, Any] = {}
        for key, value in data.items():
            key = key.strip() if isinstance(key, str) else key
            if isinstance(value, str):
                value = value.strip()
            cleaned[key] = value
        return cleaned

    @field_validator("*", mode="after")
    @classmethod
    def not_blank(cls, value: Any):
        if isinstance(value, str) and not value:
            raise ValueError("must not be empty")
        return value


class AssessmentRow(_Row):
    project_id: str
    expert_id: str
    criterion_id: str
    grade: str


class HistoryRow(AssessmentRow):
    outcome: str


class ReliabilityRow(_Row):
    project_id: str
    expert_id: str
    reliability: float = Field(ge=0.0, le=1.0)


class OutcomeRow(_Row):
    project_id: str
    outcome: str
