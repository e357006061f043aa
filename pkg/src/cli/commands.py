"""
Command orchestration: calibrate, reliability, evaluate, rank, compare.

Each command reads what it needs, runs the pipeline and writes its
artifacts under the output directory.
"""
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple

from src.aggregation.pipeline import Assessment, ProjectEvaluation, evaluate_projects, group_by_project
from src.calibration.tables import BeliefMatrix, CountTable, HistoryRecord, LikelihoodMatrix, calibrate
from src.cli.config import PipelineConfig, config_digest
from src.cli.readers import parse_assessments, parse_history, parse_outcomes, parse_reliability_overrides
from src.cli.writers import (
    Report,
    ReportRow,
    bd_payload,
    write_calibration,
    write_evaluations,
    write_histogram,
    write_profiles,
    write_ranking,
    write_report,
    write_topk,
)
from src.errors import ValidationFailure
from src.observability import log_event
from src.ranking.ranking import ProjectScore, histogram, rank, score_projects, select_top, topk_outcomes
from src.reliability.confusion import ReliabilityOverrides, ReliabilityProfile, profile_experts, resolve_reliability

COMMANDS = ("calibrate", "reliability", "evaluate", "rank", "compare")

Calibration = Dict[str, Tuple[CountTable, LikelihoodMatrix, BeliefMatrix]]


@dataclass(frozen=True)
class CommandInputs:
    history: Optional[str] = None
    assessments: Optional[str] = None
    reliabilities: Optional[str] = None
    outcomes: Optional[str] = None
    out: str = "out"


@dataclass
class CommandResult:
    command: str
    files: List[str]
    summary: Dict[str, Any] = field(default_factory=dict)
    report: Optional[Report] = None


@dataclass
class _Run:
    """State shared by the steps of one command."""

    command: str
    config: PipelineConfig
    inputs: CommandInputs
    counts: Dict[str, int] = field(default_factory=dict)

    def require(self, attribute: str) -> str:
        value = getattr(self.inputs, attribute)
        if not value:
            raise ValidationFailure(f"{self.command} needs --{attribute}")
        return value

    def metadata(self, **extra: Any) -> Dict[str, Any]:
        return {
            "command": self.command,
            "config": self.config.name,
            "config_digest": config_digest(self.config),
            "records": dict(sorted(self.counts.items())),
            **extra,
        }


def build_calibration(config: PipelineConfig, records: Sequence[HistoryRecord]) -> Calibration:
    frame = config.hypothesis_frame
    results: Calibration = {}
    for criterion in config.criteria:
        results[criterion.id] = calibrate(records, criterion.id, frame, criterion.grades, config.calibration_rounding)
        table = results[criterion.id][0]
        log_event("calibration_built", criterion=criterion.id, records=table.total, grades=len(table.grades))
    return results


def build_profiles(config: PipelineConfig, records: Sequence[HistoryRecord]) -> Dict[str, ReliabilityProfile]:
    criterion = config.require_recommendation()
    return profile_experts(records, criterion.id, criterion.fund_grades, config.funded_label)


def resolve_reliabilities(
    config: PipelineConfig,
    projects: Mapping[str, Sequence[Assessment]],
    overrides: Optional[ReliabilityOverrides],
    profiles: Optional[Mapping[str, ReliabilityProfile]],
) -> Dict[str, Dict[str, float]]:
    """Reliability of every expert on every project, directed by the expert's recommendation there."""
    recommendation = config.recommendation_criterion
    fund_grades = recommendation.fund_grades if recommendation else ()
    table: Dict[str, Dict[str, float]] = {}
    for project_id, assessments in projects.items():
        grades = {a.expert_id: a.grade for a in assessments if recommendation and a.criterion_id == recommendation.id}
        table[project_id] = {
            expert_id: resolve_reliability(
                project_id,
                expert_id,
                grades.get(expert_id),
                overrides=overrides,
                profiles=profiles,
                default=config.default_reliability_value,
                fund_grades=fund_grades,
            )
            for expert_id in sorted({a.expert_id for a in assessments})
        }
    return table


def _history(run: _Run) -> List[HistoryRecord]:
    records = parse_history(run.require("history"), run.config)
    run.counts["history"] = len(records)
    return records


def _evaluate(run: _Run) -> Tuple[List[ProjectEvaluation], Dict[str, List[Assessment]]]:
    config = run.config
    assessments = parse_assessments(run.require("assessments"), config)
    run.counts["assessments"] = len(assessments)
    records = _history(run)
    beliefs = {cid: matrices[2] for cid, matrices in build_calibration(config, records).items()}

    overrides = None
    if run.inputs.reliabilities:
        overrides = parse_reliability_overrides(run.inputs.reliabilities)
        run.counts["overrides"] = len(overrides)
    profiles = build_profiles(config, records) if config.recommendation_criterion else None

    projects = group_by_project(assessments)
    reliabilities = resolve_reliabilities(config, projects, overrides, profiles)
    evaluations = evaluate_projects(projects, beliefs, reliabilities, config.aggregation(), workers=config.workers)
    return evaluations, projects


def _row(evaluation: ProjectEvaluation, score: Optional[ProjectScore] = None) -> ReportRow:
    return ReportRow(
        project_id=evaluation.project_id,
        y=evaluation.y,
        x=score.x if score else 0.0,
        rank_y=score.rank_y if score else 0,
        rank_x=score.rank_x if score else 0,
        tie_size_y=score.tie_size_y if score else 1,
        tie_size_x=score.tie_size_x if score else 1,
        outcome=score.outcome if score else None,
        overall=bd_payload(evaluation.overall),
        criteria={c: bd_payload(bd) for c, bd in sorted(evaluation.criteria.items())},
    )


def _ranked_report(run: _Run, outcomes: Optional[Mapping[str, str]] = None) -> Tuple[Report, List[ProjectScore]]:
    evaluations, projects = _evaluate(run)
    scores = score_projects(evaluations, projects, run.config.score_maps(), outcomes)
    by_id = {s.project_id: s for s in scores}
    order = [e.project_id for e in rank(scores, "y")]
    evaluated = {e.project_id: e for e in evaluations}
    rows = tuple(_row(evaluated[pid], by_id[pid]) for pid in order)
    return Report(rows, run.metadata(projects=len(rows))), scores


def _calibrate(run: _Run, out: Path) -> CommandResult:
    results = build_calibration(run.config, _history(run))
    files = write_calibration(out, list(results.values()), run.metadata(criteria=sorted(results)))
    return CommandResult(run.command, [str(f) for f in files], {"criteria": len(results)})


def _reliability(run: _Run, out: Path) -> CommandResult:
    profiles = build_profiles(run.config, _history(run))
    files = write_profiles(out, profiles, run.metadata(experts=len(profiles)))
    usable = sum(1 for p in profiles.values() if p.usable)
    return CommandResult(run.command, [str(f) for f in files], {"experts": len(profiles), "usable": usable})


def _evaluate_command(run: _Run, out: Path) -> CommandResult:
    evaluations, _ = _evaluate(run)
    rows = [_row(e) for e in evaluations]
    files = write_evaluations(out, rows, run.metadata(projects=len(rows)))
    return CommandResult(run.command, [str(f) for f in files], {"projects": len(rows)})


def _rank(run: _Run, out: Path) -> CommandResult:
    report, _ = _ranked_report(run)
    files = write_report(out, report)
    return CommandResult(run.command, [str(f) for f in files], {"projects": len(report.rows)}, report)


def _compare(run: _Run, out: Path) -> CommandResult:
    config = run.config
    outcomes = None
    if run.inputs.outcomes:
        outcomes = parse_outcomes(run.inputs.outcomes, config)
        run.counts["outcomes"] = len(outcomes)
    report, scores = _ranked_report(run, outcomes)

    if outcomes is not None:
        missing = sorted(s.project_id for s in scores if s.outcome is None)
        if missing:
            raise ValidationFailure("outcomes file lacks evaluated projects", path=run.inputs.outcomes, value=missing[:5])

    k = min(config.top_k, len(scores))
    if k < config.top_k:
        log_event("top_k_clamped", requested=config.top_k, used=k)
    files = write_report(out, report, stem="comparison")
    selections, tallies = {}, {}
    for key in ("y", "x"):
        ranked = rank(scores, key)
        files.append(write_ranking(out, key, ranked))
        selections[key] = select_top(ranked, k)
        tallies[key] = topk_outcomes(ranked, k, config.funded_label) if outcomes is not None else None
    files += write_topk(out, k, selections, tallies, run.metadata(projects=len(scores)))

    data = histogram([(s.x, s.outcome) for s in scores], config.histogram_bin_width, config.funded_label)
    files += write_histogram(out, data, run.metadata(projects=len(scores)))

    summary: Dict[str, Any] = {"projects": len(scores), "k": k, "occupied_bins": len(data.occupied())}
    for key, tally in tallies.items():
        if tally is not None:
            summary[f"top_{key}"] = {
                "funded": tally.funded_count,
                "unfunded": tally.unfunded_count,
                "undifferentiated": tally.undifferentiated_count,
            }
    return CommandResult(run.command, [str(f) for f in files], summary, report)


_HANDLERS = {
    "calibrate": _calibrate,
    "reliability": _reliability,
    "evaluate": _evaluate_command,
    "rank": _rank,
    "compare": _compare,
}


def run_command(command: str, config: PipelineConfig, inputs: CommandInputs) -> CommandResult:
    if command not in _HANDLERS:
        raise ValidationFailure(f"unknown command, expected one of {list(COMMANDS)}", value=command)
    out = Path(inputs.out)
    run = _Run(command, config, inputs)
    try:
        out.mkdir(parents=True, exist_ok=True)
        result = _HANDLERS[command](run, out)
    except OSError as exc:
        path = exc.filename or out
        raise ValidationFailure(f"file system error: {exc.strerror or exc}", path=str(path)) from None
    result.summary = {"command": command, "config_digest": config_digest(config), **result.summary}
    return result
