from src.aggregation.pipeline import (
    AggregationConfig,
    AggregationOrder,
    Assessment,
    ExpertWeightMode,
    ProjectEvaluation,
    aggregate_criterion,
    aggregate_expert,
    aggregate_project,
    evaluate_project,
    evaluate_projects,
    expert_evidence,
    group_by_project,
)

__all__ = [
    "AggregationConfig",
    "AggregationOrder",
    "Assessment",
    "ExpertWeightMode",
    "ProjectEvaluation",
    "aggregate_criterion",
    "aggregate_expert",
    "aggregate_project",
    "evaluate_project",
    "evaluate_projects",
    "expert_evidence",
    "group_by_project",
]
