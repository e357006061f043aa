"""
Report emission.

Every artifact is written twice: a CSV with numbers at four decimals for
reading, and a JSON file at full precision that the read_* functions load
back unchanged. Nothing time- or host-dependent goes into either, so the
same inputs give byte-identical files.
"""
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import pandas as pd

from src.calibration.tables import BeliefMatrix, CountTable, LikelihoodMatrix
from src.errors import ValidationFailure
from src.evidence.belief import BeliefDistribution
from src.ranking.ranking import HistogramData, RankedEntry, Selection, TopKReport
from src.reliability.confusion import ConfusionMatrix, ReliabilityProfile, accuracy, recognition_rates

DISPLAY_PLACES = 4


@dataclass(frozen=True)
class ReportRow:
    project_id: str
    y: float
    x: float
    rank_y: int
    rank_x: int
    tie_size_y: int = 1
    tie_size_x: int = 1
    outcome: Optional[str] = None
    overall: Dict[str, float] = field(default_factory=dict)
    criteria: Dict[str, Dict[str, float]] = field(default_factory=dict)

    @property
    def tie_group_y(self) -> int:
        return self.rank_y

    @property
    def tie_group_x(self) -> int:
        return self.rank_x


@dataclass(frozen=True)
class Report:
    """Per-project rows in descending y order plus run metadata."""

    rows: Tuple[ReportRow, ...]
    metadata: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "rows", tuple(self.rows))
        expected = self.metadata.get("projects")
        if expected is not None and expected != len(self.rows):
            raise ValidationFailure("report row count differs from evaluated project count", value=len(self.rows))


def fmt(value: Optional[float]) -> str:
    return "" if value is None else f"{value:.{DISPLAY_PLACES}f}"


def _write_csv(path: Path, columns: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
    pd.DataFrame(list(rows), columns=list(columns)).to_csv(path, index=False, lineterminator="\n")
    return path


def _write_json(path: Path, payload: Any) -> Path:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(json.dumps(payload, indent=2, sort_keys=True, ensure_ascii=True))
        f.write("\n")
    return path


def _read_json(path: str) -> Any:
    file = Path(path)
    if not file.is_file():
        raise ValidationFailure("file not found", path=str(path))
    try:
        return json.loads(file.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ValidationFailure(f"invalid JSON: {exc.msg}", path=str(path), line=exc.lineno) from None


def bd_payload(bd: BeliefDistribution) -> Dict[str, float]:
    """Masses keyed by proposition label; singletons always present."""
    payload = {label: 0.0 for label in bd.frame.hypotheses}
    payload.update(bd.as_label_dict())
    return payload


# --- calibration ---------------------------------------------------------


def write_calibration(
    out_dir: Path,
    results: Sequence[Tuple[CountTable, LikelihoodMatrix, BeliefMatrix]],
    metadata: Mapping[str, Any],
) -> List[Path]:
    """One CSV per criterion laid out as count / likelihood / belief blocks, one JSON for all."""
    written: List[Path] = []
    for table, likelihood, beliefs in results:
        rows = []
        for i, hypothesis in enumerate(table.hypotheses):
            rows.append(["count", hypothesis, *[str(v) for v in table.counts[i]]])
        for i, hypothesis in enumerate(likelihood.hypotheses):
            rows.append(["likelihood", hypothesis, *[fmt(v) for v in likelihood.entries[i]]])
        for i, hypothesis in enumerate(beliefs.hypotheses):
            rows.append(["belief", hypothesis, *[fmt(v) for v in beliefs.entries[i]]])
        written.append(
            _write_csv(out_dir / f"calibration_{table.criterion_id}.csv", ["matrix", "hypothesis", *table.grades], rows)
        )
    payload = {
        "metadata": dict(metadata),
        "criteria": [
            {
                "criterion_id": table.criterion_id,
                "hypotheses": list(table.hypotheses),
                "grades": list(table.grades),
                "counts": [list(row) for row in table.counts],
                "likelihoods": [list(row) for row in likelihood.entries],
                "beliefs": [list(row) for row in beliefs.entries],
                "rounding": beliefs.rounding,
            }
            for table, likelihood, beliefs in results
        ],
    }
    written.append(_write_json(out_dir / "calibration.json", payload))
    return written


def read_belief_matrix_json(path: str) -> Dict[str, BeliefMatrix]:
    data = _read_json(path)
    try:
        return {
            c["criterion_id"]: BeliefMatrix(c["criterion_id"], c["hypotheses"], c["grades"], c["beliefs"], c.get("rounding"))
            for c in data["criteria"]
        }
    except (KeyError, TypeError) as exc:
        raise ValidationFailure(f"not a calibration file: missing {exc}", path=str(path)) from None


# --- reliability ---------------------------------------------------------

PROFILE_COLUMNS = (
    "expert_id", "tp", "fn", "fp", "tn", "positive_rate", "negative_rate",
    "accuracy", "funded_recall", "unfunded_recall", "usable",
)


def write_profiles(out_dir: Path, profiles: Mapping[str, ReliabilityProfile], metadata: Mapping[str, Any]) -> List[Path]:
    rows = []
    experts = []
    for expert_id, p in sorted(profiles.items()):
        cm = p.confusion or ConfusionMatrix()
        funded_recall, unfunded_recall = recognition_rates(cm)
        rows.append([
            expert_id, cm.tp, cm.fn, cm.fp, cm.tn,
            fmt(p.positive_rate), fmt(p.negative_rate),
            fmt(accuracy(cm)), fmt(funded_recall), fmt(unfunded_recall),
            str(p.usable).lower(),
        ])
        experts.append({
            "expert_id": expert_id,
            "confusion": {"tp": cm.tp, "fn": cm.fn, "fp": cm.fp, "tn": cm.tn},
            "positive_rate": p.positive_rate,
            "negative_rate": p.negative_rate,
            "usable": p.usable,
        })
    return [
        _write_csv(out_dir / "reliability.csv", PROFILE_COLUMNS, rows),
        _write_json(out_dir / "reliability.json", {"metadata": dict(metadata), "experts": experts}),
    ]


def read_profiles_json(path: str) -> Dict[str, ReliabilityProfile]:
    data = _read_json(path)
    try:
        return {
            e["expert_id"]: ReliabilityProfile(
                expert_id=e["expert_id"],
                positive_rate=e["positive_rate"],
                negative_rate=e["negative_rate"],
                usable=e["usable"],
                confusion=ConfusionMatrix(**e["confusion"]),
            )
            for e in data["experts"]
        }
    except (KeyError, TypeError) as exc:
        raise ValidationFailure(f"not a reliability file: missing {exc}", path=str(path)) from None


# --- evaluation ----------------------------------------------------------


def write_evaluations(out_dir: Path, rows: Sequence[ReportRow], metadata: Mapping[str, Any]) -> List[Path]:
    """Long-format distributions: one line per project, level and proposition."""
    lines = []
    for row in sorted(rows, key=lambda r: r.project_id):
        for level, masses in [*sorted(row.criteria.items()), ("overall", row.overall)]:
            for proposition, mass in masses.items():
                lines.append([row.project_id, level, proposition, fmt(mass)])
    payload = {
        "metadata": dict(metadata),
        "projects": [
            {"project_id": r.project_id, "y": r.y, "overall": r.overall, "criteria": r.criteria}
            for r in sorted(rows, key=lambda r: r.project_id)
        ],
    }
    return [
        _write_csv(out_dir / "evaluation.csv", ["project_id", "level", "proposition", "mass"], lines),
        _write_json(out_dir / "evaluation.json", payload),
    ]


# --- report --------------------------------------------------------------


def _report_columns(rows: Sequence[ReportRow]) -> List[str]:
    levels = sorted({(c, p) for r in rows for c, masses in r.criteria.items() for p in masses})
    return [f"{c}:{p}" for c, p in levels]


def write_report(out_dir: Path, report: Report, stem: str = "report") -> List[Path]:
    extra = _report_columns(report.rows)
    columns = [
        "project_id", "y", "x", "rank_y", "rank_x", "tie_group_y", "tie_size_y",
        "tie_group_x", "tie_size_x", "outcome", *extra,
    ]
    lines = []
    for r in report.rows:
        criteria = {f"{c}:{p}": m for c, masses in r.criteria.items() for p, m in masses.items()}
        lines.append([
            r.project_id, fmt(r.y), fmt(r.x), r.rank_y, r.rank_x, r.tie_group_y, r.tie_size_y,
            r.tie_group_x, r.tie_size_x, r.outcome or "",
            *[fmt(criteria.get(name)) for name in extra],
        ])
    payload = {"metadata": report.metadata, "rows": [asdict(r) for r in report.rows]}
    return [
        _write_csv(out_dir / f"{stem}.csv", columns, lines),
        _write_json(out_dir / f"{stem}.json", payload),
    ]


def read_report_json(path: str) -> Report:
    data = _read_json(path)
    try:
        return Report(rows=tuple(ReportRow(**row) for row in data["rows"]), metadata=data["metadata"])
    except (KeyError, TypeError) as exc:
        raise ValidationFailure(f"not a report file: {exc}", path=str(path)) from None


# --- comparison ----------------------------------------------------------


def write_topk(
    out_dir: Path,
    k: int,
    selections: Mapping[str, Selection],
    tallies: Mapping[str, Optional[TopKReport]],
    metadata: Mapping[str, Any],
) -> List[Path]:
    lines = []
    payload: Dict[str, Any] = {"metadata": dict(metadata), "k": k, "by": {}}
    for key in sorted(selections):
        selection, tally = selections[key], tallies.get(key)
        lines.append([
            key, k,
            "" if tally is None else tally.funded_count,
            "" if tally is None else tally.unfunded_count,
            "" if tally is None else tally.undifferentiated_count,
            len(selection.selected), len(selection.undecided), selection.open_slots,
        ])
        payload["by"][key] = {
            "selected": list(selection.selected),
            "undecided": list(selection.undecided),
            "open_slots": selection.open_slots,
            "outcomes": None if tally is None else asdict(tally),
        }
    return [
        _write_csv(
            out_dir / "topk.csv",
            ["ranked_by", "k", "funded", "unfunded", "undifferentiated", "selected", "undecided", "open_slots"],
            lines,
        ),
        _write_json(out_dir / "topk.json", payload),
    ]


def write_histogram(out_dir: Path, data: HistogramData, metadata: Mapping[str, Any]) -> List[Path]:
    lines = [[fmt(b.lower), fmt(b.upper), b.funded, b.unfunded, b.unknown] for b in data.bins]
    payload = {"metadata": dict(metadata), "bin_width": data.bin_width, "bins": [asdict(b) for b in data.bins]}
    return [
        _write_csv(out_dir / "histogram.csv", ["lower", "upper", "funded", "unfunded", "unknown"], lines),
        _write_json(out_dir / "histogram.json", payload),
    ]


def ranking_rows(ranked: Sequence[RankedEntry]) -> List[List[Any]]:
    return [[e.position, e.project_id, fmt(e.score), e.rank, e.tie_size, e.outcome or ""] for e in ranked]


def write_ranking(out_dir: Path, key: str, ranked: Sequence[RankedEntry]) -> Path:
    return _write_csv(
        out_dir / f"ranking_{key}.csv",
        ["position", "project_id", "score", "rank", "tie_size", "outcome"],
        ranking_rows(ranked),
    )
