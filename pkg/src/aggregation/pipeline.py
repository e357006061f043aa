"""
Two-stage aggregation of expert assessments.

Experts first: each criterion's assessments are combined across experts with
w = r (raw or normalized reliabilities), then the criterion results are
combined with normalized criterion weights (w = r = normalized weight).
Criteria first runs the same two stages the other way round.
"""
from collections import defaultdict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

from src.calibration.tables import BeliefMatrix, grade_to_bd
from src.errors import NoEffectiveEvidenceError, ValidationFailure
from src.evidence.belief import BeliefDistribution, Evidence
from src.evidence.er_rule import ER, combine
from src.observability import PROJECTS_EVALUATED, log_event


class ExpertWeightMode(str, Enum):
    RAW = "raw"
    NORMALIZED = "normalized"


class AggregationOrder(str, Enum):
    EXPERTS_FIRST = "experts_first"
    CRITERIA_FIRST = "criteria_first"


@dataclass(frozen=True)
class Assessment:
    project_id: str
    expert_id: str
    criterion_id: str
    grade: str
    line: Optional[int] = field(default=None, compare=False)


@dataclass(frozen=True)
class AggregationConfig:
    """
    criterion_weights are normalized to sum to one at the criterion stage,
    and each criterion's reliability is set equal to its normalized weight.
    """

    criterion_weights: Mapping[str, float]
    expert_weight_mode: ExpertWeightMode = ExpertWeightMode.RAW
    aggregation_order: AggregationOrder = AggregationOrder.EXPERTS_FIRST
    discounting: str = ER
    funded: str = "Funded"

    def __post_init__(self):
        weights = dict(self.criterion_weights)
        if any(w < 0 for w in weights.values()):
            raise ValidationFailure("criterion weights must be non-negative", value=weights)
        if not any(w > 0 for w in weights.values()):
            raise ValidationFailure("at least one criterion weight must be positive", value=weights)
        object.__setattr__(self, "criterion_weights", weights)
        object.__setattr__(self, "expert_weight_mode", ExpertWeightMode(self.expert_weight_mode))
        object.__setattr__(self, "aggregation_order", AggregationOrder(self.aggregation_order))


@dataclass(frozen=True)
class ProjectEvaluation:
    project_id: str
    overall: BeliefDistribution
    criteria: Mapping[str, BeliefDistribution]
    reliabilities: Mapping[str, float]
    y: float


def _bd_for(a: Assessment, beliefs: BeliefMatrix) -> BeliefDistribution:
    try:
        return grade_to_bd(beliefs, a.grade)
    except ValidationFailure as exc:
        raise ValidationFailure(exc.message, line=a.line, value=a.grade) from None


def _expert_weight(r: float, mode: ExpertWeightMode, reliability_total: Optional[float]) -> float:
    if mode is ExpertWeightMode.RAW:
        return r
    if reliability_total is None:
        raise ValidationFailure("normalized expert weights need the reliability total of the panel")
    return r / reliability_total if reliability_total > 0.0 else 0.0


def expert_evidence(
    a: Assessment,
    beliefs: BeliefMatrix,
    r: float,
    mode: ExpertWeightMode = ExpertWeightMode.RAW,
    reliability_total: Optional[float] = None,
) -> Evidence:
    """
    Evidence for one assessment with w = r.

    In normalized mode both are r / reliability_total, the sum of the
    reliabilities of the project's experts on that criterion.
    """
    weight = _expert_weight(r, ExpertWeightMode(mode), reliability_total)
    return Evidence(_bd_for(a, beliefs), weight, weight)


def _check_reliabilities(experts: Iterable[str], reliabilities: Mapping[str, float], project_id: str) -> None:
    for expert_id in experts:
        if expert_id not in reliabilities:
            raise ValidationFailure(f"no reliability for expert {expert_id!r} on project {project_id!r}", value=expert_id)
        r = reliabilities[expert_id]
        if not 0.0 <= r <= 1.0:
            raise ValidationFailure(f"reliability of expert {expert_id!r} must lie in [0, 1]", value=r)


def aggregate_criterion(
    assessments: Sequence[Assessment],
    beliefs: BeliefMatrix,
    reliabilities: Mapping[str, float],
    config: AggregationConfig,
) -> BeliefDistribution:
    """Combine every expert's assessment of one project on one criterion."""
    if not assessments:
        raise ValidationFailure(f"no assessments for criterion {beliefs.criterion_id!r}")
    project_id = assessments[0].project_id
    for a in assessments:
        if a.project_id != project_id or a.criterion_id != beliefs.criterion_id:
            raise ValidationFailure(
                f"assessment does not belong to project {project_id!r} / criterion {beliefs.criterion_id!r}",
                line=a.line,
                value=f"{a.project_id}/{a.criterion_id}",
            )
    _check_reliabilities((a.expert_id for a in assessments), reliabilities, project_id)
    total = sum(reliabilities[a.expert_id] for a in assessments)
    if total <= 0.0:
        raise NoEffectiveEvidenceError(
            f"no effective evidence: every expert on project {project_id!r} criterion "
            f"{beliefs.criterion_id!r} has zero reliability"
        )
    evidence = [
        expert_evidence(a, beliefs, reliabilities[a.expert_id], config.expert_weight_mode, total)
        for a in assessments
    ]
    return combine(evidence, config.discounting)


def _normalized_criterion_weights(criteria: Iterable[str], config: AggregationConfig) -> Dict[str, float]:
    weights: Dict[str, float] = {}
    for criterion_id in criteria:
        if criterion_id not in config.criterion_weights:
            raise ValidationFailure("criterion is not configured", value=criterion_id)
        weights[criterion_id] = config.criterion_weights[criterion_id]
    total = sum(weights.values())
    if total <= 0.0:
        raise ValidationFailure("criterion weights sum to zero", value=weights)
    return {criterion_id: w / total for criterion_id, w in weights.items()}


def aggregate_project(criterion_bds: Mapping[str, BeliefDistribution], config: AggregationConfig) -> BeliefDistribution:
    """Combine criterion-level distributions with w = r = normalized criterion weight."""
    if not criterion_bds:
        raise ValidationFailure("no criterion results to aggregate")
    weights = _normalized_criterion_weights(criterion_bds, config)
    evidence = [Evidence(bd, weights[c], weights[c]) for c, bd in sorted(criterion_bds.items())]
    return combine(evidence, config.discounting)


def aggregate_expert(
    assessments: Sequence[Assessment],
    beliefs: Mapping[str, BeliefMatrix],
    config: AggregationConfig,
) -> BeliefDistribution:
    """One expert's criteria folded into a single distribution (criteria-first order)."""
    criterion_bds: Dict[str, BeliefDistribution] = {}
    for a in assessments:
        if a.criterion_id not in beliefs:
            raise ValidationFailure("assessment names an unknown criterion", line=a.line, value=a.criterion_id)
        criterion_bds[a.criterion_id] = _bd_for(a, beliefs[a.criterion_id])
    return aggregate_project(criterion_bds, config)


def _by_criterion(assessments: Iterable[Assessment], beliefs: Mapping[str, BeliefMatrix]) -> Dict[str, List[Assessment]]:
    grouped: Dict[str, List[Assessment]] = defaultdict(list)
    for a in assessments:
        if a.criterion_id not in beliefs:
            raise ValidationFailure("assessment names an unknown criterion", line=a.line, value=a.criterion_id)
        grouped[a.criterion_id].append(a)
    return dict(sorted(grouped.items()))


def _experts_first(
    assessments: Sequence[Assessment],
    beliefs: Mapping[str, BeliefMatrix],
    reliabilities: Mapping[str, float],
    config: AggregationConfig,
) -> Tuple[BeliefDistribution, Dict[str, BeliefDistribution]]:
    criteria: Dict[str, BeliefDistribution] = {}
    for criterion_id, group in _by_criterion(assessments, beliefs).items():
        if config.criterion_weights.get(criterion_id, 0.0) <= 0.0:
            continue
        criteria[criterion_id] = aggregate_criterion(group, beliefs[criterion_id], reliabilities, config)
    if not criteria:
        raise NoEffectiveEvidenceError("no effective evidence: no assessed criterion carries weight")
    return aggregate_project(criteria, config), criteria


def _criteria_first(
    assessments: Sequence[Assessment],
    beliefs: Mapping[str, BeliefMatrix],
    reliabilities: Mapping[str, float],
    config: AggregationConfig,
) -> Tuple[BeliefDistribution, Dict[str, BeliefDistribution]]:
    by_expert: Dict[str, List[Assessment]] = defaultdict(list)
    for a in assessments:
        by_expert[a.expert_id].append(a)
    project_id = assessments[0].project_id
    _check_reliabilities(by_expert, reliabilities, project_id)
    total = sum(reliabilities[e] for e in by_expert)
    if total <= 0.0:
        raise NoEffectiveEvidenceError(f"no effective evidence: every expert on project {project_id!r} has zero reliability")
    evidence = []
    for expert_id, own in sorted(by_expert.items()):
        weight = _expert_weight(reliabilities[expert_id], config.expert_weight_mode, total)
        if weight <= 0.0:
            continue
        evidence.append(Evidence(aggregate_expert(own, beliefs, config), weight, weight))
    return combine(evidence, config.discounting), {}


def evaluate_project(
    assessments: Sequence[Assessment],
    beliefs: Mapping[str, BeliefMatrix],
    reliabilities: Mapping[str, float],
    config: AggregationConfig,
) -> ProjectEvaluation:
    """Full pipeline for one project; y is the overall mass on the funded hypothesis."""
    if not assessments:
        raise ValidationFailure("project has no assessments")
    project_id = assessments[0].project_id
    if any(a.project_id != project_id for a in assessments):
        raise ValidationFailure("assessments span several projects", value=project_id)
    if config.aggregation_order is AggregationOrder.CRITERIA_FIRST:
        overall, criteria = _criteria_first(assessments, beliefs, reliabilities, config)
    else:
        overall, criteria = _experts_first(assessments, beliefs, reliabilities, config)
    PROJECTS_EVALUATED.labels(config.expert_weight_mode.value).inc()
    y = overall.probability(config.funded)
    log_event("project_evaluated", project_id=project_id, y=round(y, 6), experts=len({a.expert_id for a in assessments}))
    return ProjectEvaluation(
        project_id=project_id,
        overall=overall,
        criteria=criteria,
        reliabilities={e: reliabilities[e] for e in sorted({a.expert_id for a in assessments})},
        y=y,
    )


def group_by_project(assessments: Iterable[Assessment]) -> Dict[str, List[Assessment]]:
    grouped: Dict[str, List[Assessment]] = defaultdict(list)
    for a in assessments:
        grouped[a.project_id].append(a)
    return dict(sorted(grouped.items()))


def evaluate_projects(
    projects: Mapping[str, Sequence[Assessment]],
    beliefs: Mapping[str, BeliefMatrix],
    reliabilities: Mapping[str, Mapping[str, float]],
    config: AggregationConfig,
    workers: int = 1,
) -> List[ProjectEvaluation]:
    """Evaluate independent projects, optionally on a thread pool; output is ordered by project_id."""
    if not projects:
        raise ValidationFailure("no projects to evaluate")

    def run(project_id: str) -> ProjectEvaluation:
        return evaluate_project(projects[project_id], beliefs, reliabilities.get(project_id, {}), config)

    ordered = sorted(projects)
    if workers <= 1:
        return [run(project_id) for project_id in ordered]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(run, ordered))
