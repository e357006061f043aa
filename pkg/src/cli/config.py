"""
Pipeline configuration.

Layers, later ones winning: bundled preset, config file, runtime override
file (ERFUND_RUNTIME_CONFIG), command-line flags.
"""
import hashlib
import json
import os
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Union

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from src.aggregation.pipeline import AggregationConfig, AggregationOrder, ExpertWeightMode
from src.errors import ValidationFailure
from src.evidence.er_rule import ER
from src.evidence.frame import Frame, make_frame

PRESET_DIR = Path(__file__).resolve().parents[1] / "data" / "presets"
DEFAULT_PRESET = "nsfc-case-study"
RUNTIME_CONFIG_ENV = "ERFUND_RUNTIME_CONFIG"


class CriterionConfig(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    id: str
    name: Optional[str] = None
    grades: List[str] = Field(min_length=2)
    weight: float = Field(ge=0.0)
    scores: Dict[str, float] = Field(default_factory=dict)
    recommendation: bool = False
    fund_grades: List[str] = Field(default_factory=list)

    @model_validator(mode="before")
    @classmethod
    def preprocess_input(cls, data: Any):
        if isinstance(data, dict):
            data = dict(data)
            for key in ("id", "name"):
                if isinstance(data.get(key), str):
                    data[key] = data[key].strip()
            # YAML reads bare numbers as ints; criterion ids and grades are labels.
            if data.get("id") is not None:
                data["id"] = str(data["id"])
            if isinstance(data.get("grades"), list):
                data["grades"] = [str(g).strip() for g in data["grades"]]
            if isinstance(data.get("scores"), dict):
                data["scores"] = {str(k).strip(): v for k, v in data["scores"].items()}
            if isinstance(data.get("fund_grades"), list):
                data["fund_grades"] = [str(g).strip() for g in data["fund_grades"]]
        return data

    @model_validator(mode="after")
    def validate_logic(self):
        folded = [g.casefold() for g in self.grades]
        if len(set(folded)) != len(folded):
            raise ValueError(f"criterion {self.id!r} repeats a grade")
        if self.scores and {g.casefold() for g in self.scores} != set(folded):
            raise ValueError(f"criterion {self.id!r} scores must cover exactly its grades")
        unknown = [g for g in self.fund_grades if g.casefold() not in folded]
        if unknown:
            raise ValueError(f"criterion {self.id!r} fund grades {unknown} are not among its grades")
        if self.recommendation and not self.fund_grades:
            raise ValueError(f"recommendation criterion {self.id!r} needs fund_grades")
        return self


class PipelineConfig(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    name: str = "custom"
    frame: List[str] = Field(min_length=2)
    funded_label: str
    criteria: List[CriterionConfig] = Field(min_length=1)
    expert_weight_mode: ExpertWeightMode = ExpertWeightMode.RAW
    calibration_rounding: Optional[Literal[4]] = None
    default_reliability: Union[Literal["error"], float] = "error"
    aggregation_order: AggregationOrder = AggregationOrder.EXPERTS_FIRST
    discounting: Literal["er", "shafer"] = ER
    workers: int = Field(default=1, ge=1)
    top_k: int = Field(default=20, ge=1)
    histogram_bin_width: float = Field(default=0.2, gt=0.0)

    @model_validator(mode="before")
    @classmethod
    def preprocess_input(cls, data: Any):
        if isinstance(data, dict):
            data = dict(data)
            if isinstance(data.get("frame"), list):
                data["frame"] = [str(h).strip() for h in data["frame"]]
            if isinstance(data.get("funded_label"), str):
                data["funded_label"] = data["funded_label"].strip()
            if isinstance(data.get("default_reliability"), str):
                data["default_reliability"] = data["default_reliability"].strip()
        return data

    @model_validator(mode="after")
    def validate_logic(self):
        if len(set(self.frame)) != len(self.frame):
            raise ValueError("frame repeats a hypothesis")
        if self.funded_label not in self.frame:
            raise ValueError(f"funded_label {self.funded_label!r} is not in the frame")
        ids = [c.id for c in self.criteria]
        if len(set(ids)) != len(ids):
            raise ValueError("criterion ids must be unique")
        if sum(1 for c in self.criteria if c.recommendation) > 1:
            raise ValueError("at most one criterion may be the recommendation criterion")
        if not any(c.weight > 0 for c in self.criteria):
            raise ValueError("at least one criterion weight must be positive")
        if isinstance(self.default_reliability, float) and not 0.0 <= self.default_reliability <= 1.0:
            raise ValueError("default_reliability must be 'error' or a value in [0, 1]")
        return self

    @property
    def hypothesis_frame(self) -> Frame:
        return make_frame(self.frame)

    def criterion(self, criterion_id: str) -> CriterionConfig:
        for c in self.criteria:
            if c.id == criterion_id:
                return c
        raise ValidationFailure("unknown criterion", value=criterion_id)

    @property
    def recommendation_criterion(self) -> Optional[CriterionConfig]:
        return next((c for c in self.criteria if c.recommendation), None)

    def require_recommendation(self) -> CriterionConfig:
        criterion = self.recommendation_criterion
        if criterion is None:
            raise ValidationFailure("deriving reliability from history needs exactly one recommendation criterion")
        return criterion

    @property
    def default_reliability_value(self) -> Optional[float]:
        return None if self.default_reliability == "error" else float(self.default_reliability)

    def score_maps(self) -> Dict[str, Dict[str, float]]:
        missing = [c.id for c in self.criteria if not c.scores]
        if missing:
            raise ValidationFailure("baseline scores are not configured for every criterion", value=missing)
        return {c.id: dict(c.scores) for c in self.criteria}

    def aggregation(self) -> AggregationConfig:
        return AggregationConfig(
            criterion_weights={c.id: c.weight for c in self.criteria},
            expert_weight_mode=self.expert_weight_mode,
            aggregation_order=self.aggregation_order,
            discounting=self.discounting,
            funded=self.funded_label,
        )


def _read_yaml(path: Path) -> Dict[str, Any]:
    if not path.exists():
        raise ValidationFailure("config file not found", path=str(path))
    try:
        data = yaml.safe_load(path.read_text(encoding="utf-8")) or {}
    except yaml.YAMLError as exc:
        raise ValidationFailure(f"config is not valid YAML/JSON: {exc}", path=str(path)) from None
    if not isinstance(data, dict):
        raise ValidationFailure("config must be a mapping", path=str(path), value=type(data).__name__)
    return data


def load_preset(name: str) -> Dict[str, Any]:
    path = PRESET_DIR / f"{name}.yaml"
    if not path.exists():
        available = sorted(p.stem for p in PRESET_DIR.glob("*.yaml"))
        raise ValidationFailure(f"unknown preset, expected one of {available}", value=name)
    return _read_yaml(path)


def load_runtime_config() -> Dict[str, Any]:
    path = os.environ.get(RUNTIME_CONFIG_ENV)
    if not path or not Path(path).exists():
        return {}
    return _read_yaml(Path(path))


def merge_config(base: Dict[str, Any], override: Dict[str, Any]) -> Dict[str, Any]:
    merged = dict(base)
    for key, value in (override or {}).items():
        merged[key] = value
    return merged


def load_config(path: Optional[str] = None, overrides: Optional[Dict[str, Any]] = None) -> PipelineConfig:
    file_values = _read_yaml(Path(path)) if path else {"preset": DEFAULT_PRESET}
    preset = file_values.pop("preset", None)
    merged = load_preset(preset) if preset else {}
    merged = merge_config(merged, file_values)
    merged = merge_config(merged, load_runtime_config())
    merged = merge_config(merged, {k: v for k, v in (overrides or {}).items() if v is not None})
    try:
        return PipelineConfig.model_validate(merged)
    except ValidationError as e:
        errors = [f"{'.'.join(str(x) for x in err['loc']) or 'config'}: {err['msg']}" for err in e.errors()]
        raise ValidationFailure("; ".join(errors), path=path) from None


def config_digest(config: PipelineConfig) -> str:
    canonical = json.dumps(config.model_dump(mode="json"), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]
