import csv
from pathlib import Path
from typing import Dict, List, Sequence

import pytest

from src.aggregation.pipeline import AggregationConfig, Assessment, ExpertWeightMode
from src.calibration.tables import CountTable, beliefs_from_likelihoods, likelihoods, records_from_counts
from src.cli.config import load_config
from src.validation.validator import clear_rejected_rows

C1_GRADES = ("Poor", "Average", "Good", "Excellent")
C2_GRADES = ("Not fund", "Fund", "Fund with priority")
FRAME = ("Funded", "Unfunded")
EXPERTS = ("E1", "E2", "E3", "E4", "E5")

C1_COUNTS = CountTable("C1", FRAME, C1_GRADES, [[6, 51, 167, 194], [260, 900, 629, 200]])
C2_COUNTS = CountTable("C2", FRAME, C2_GRADES, [[66, 211, 141], [1192, 680, 117]])

# project_id -> (C1 grades, C2 grades, reliabilities), experts E1..E5 in order
PANELS = {
    "T6": (
        ["Excellent", "Good", "Average", "Good", "Good"],
        ["Fund with priority", "Fund", "Not fund", "Fund", "Fund"],
        [0.6667, 0.3466, 1.0, 0.25, 0.1],
    ),
    "P4": (
        ["Excellent", "Good", "Good", "Excellent", "Average"],
        ["Fund with priority", "Fund", "Fund", "Fund", "Not fund"],
        [0.0, 0.2981, 0.2981, 0.0, 0.9834],
    ),
    "P5": (
        ["Good", "Good", "Average", "Excellent", "Excellent"],
        ["Fund", "Fund", "Not fund", "Fund with priority", "Fund"],
        [0.4286, 0.3478, 1.0, 0.3478, 0.2857],
    ),
    "P6": (
        ["Good", "Good", "Good", "Average", "Excellent"],
        ["Fund", "Fund", "Fund", "Fund", "Fund"],
        [0.3478, 0.4, 0.6667, 0.3478, 0.25],
    ),
}


def panel(project_id: str) -> List[Assessment]:
    c1, c2, _ = PANELS[project_id]
    rows = []
    for expert_id, g1, g2 in zip(EXPERTS, c1, c2):
        rows.append(Assessment(project_id, expert_id, "C1", g1))
        rows.append(Assessment(project_id, expert_id, "C2", g2))
    return rows


def panel_reliabilities(project_id: str) -> Dict[str, float]:
    return dict(zip(EXPERTS, PANELS[project_id][2]))


def write_csv(path: Path, header: Sequence[str], rows: Sequence[Sequence[object]]) -> Path:
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
    return path


@pytest.fixture(autouse=True)
def _isolated(monkeypatch):
    monkeypatch.delenv("ERFUND_RUNTIME_CONFIG", raising=False)
    clear_rejected_rows()
    yield


@pytest.fixture
def case_config():
    return load_config()


@pytest.fixture
def count_tables():
    return [C1_COUNTS, C2_COUNTS]


@pytest.fixture
def history_records(count_tables):
    return records_from_counts(count_tables)


@pytest.fixture
def beliefs_round4():
    return {t.criterion_id: beliefs_from_likelihoods(likelihoods(t), rounding=4) for t in (C1_COUNTS, C2_COUNTS)}


@pytest.fixture
def beliefs_full():
    return {t.criterion_id: beliefs_from_likelihoods(likelihoods(t)) for t in (C1_COUNTS, C2_COUNTS)}


@pytest.fixture
def raw_config():
    return AggregationConfig(criterion_weights={"C1": 2.0, "C2": 1.0})


@pytest.fixture
def normalized_config():
    return AggregationConfig(
        criterion_weights={"C1": 2.0, "C2": 1.0},
        expert_weight_mode=ExpertWeightMode.NORMALIZED,
    )


@pytest.fixture
def history_csv(tmp_path, history_records):
    return write_csv(
        tmp_path / "history.csv",
        ["project_id", "expert_id", "criterion_id", "grade", "outcome"],
        [(r.project_id, r.expert_id, r.criterion_id, r.grade, r.outcome) for r in history_records],
    )


@pytest.fixture
def panels_csv(tmp_path):
    rows = [(a.project_id, a.expert_id, a.criterion_id, a.grade) for pid in ("P4", "P5", "P6") for a in panel(pid)]
    return write_csv(tmp_path / "assessments.csv", ["project_id", "expert_id", "criterion_id", "grade"], rows)


@pytest.fixture
def panel_reliabilities_csv(tmp_path):
    rows = [(pid, e, r) for pid in ("T6", "P4", "P5", "P6") for e, r in panel_reliabilities(pid).items()]
    return write_csv(tmp_path / "reliabilities.csv", ["project_id", "expert_id", "reliability"], rows)
