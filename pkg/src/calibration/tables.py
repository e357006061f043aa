"""
Calibration - turn historical assessments into belief matrices.

Step 1 tallies grade/outcome pairs per criterion, step 2 row-normalizes the
counts into likelihoods c[i][j] = P(grade j | hypothesis i), step 3
column-normalizes the likelihoods into beliefs p[i][j], and step 4 reads a
grade's column back out as a belief distribution.

All experts' history is pooled: one matrix per criterion.
"""
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from src.errors import CalibrationError, ValidationFailure
from src.evidence.belief import BeliefDistribution
from src.evidence.frame import Frame

STOCHASTIC_TOLERANCE = 1e-9
ROUNDING_CHOICES = (None, 4)


@dataclass(frozen=True)
class HistoryRecord:
    """One expert's grade on one criterion of a project whose outcome is known."""

    project_id: str
    expert_id: str
    criterion_id: str
    grade: str
    outcome: str
    line: Optional[int] = field(default=None, compare=False)


def canonical_grade(grades: Sequence[str], grade: str) -> str:
    """Match a grade against the vocabulary ignoring case and surrounding space."""
    wanted = str(grade).strip().casefold()
    for candidate in grades:
        if candidate.strip().casefold() == wanted:
            return candidate
    raise ValidationFailure(f"unknown grade, expected one of {list(grades)}", value=grade)


def _as_rows(entries: Iterable[Iterable[float]]) -> Tuple[Tuple[float, ...], ...]:
    return tuple(tuple(float(v) for v in row) for row in entries)


@dataclass(frozen=True)
class CountTable:
    """Assessment counts per (hypothesis, grade) for one criterion."""

    criterion_id: str
    hypotheses: Tuple[str, ...]
    grades: Tuple[str, ...]
    counts: Tuple[Tuple[int, ...], ...]

    def __post_init__(self):
        counts = tuple(tuple(int(v) for v in row) for row in self.counts)
        object.__setattr__(self, "hypotheses", tuple(self.hypotheses))
        object.__setattr__(self, "grades", tuple(self.grades))
        object.__setattr__(self, "counts", counts)
        if len(counts) != len(self.hypotheses) or any(len(row) != len(self.grades) for row in counts):
            raise ValidationFailure(f"count table for {self.criterion_id} has the wrong shape")
        if any(v < 0 for row in counts for v in row):
            raise ValidationFailure(f"count table for {self.criterion_id} has negative counts")

    def to_numpy(self) -> np.ndarray:
        return np.array(self.counts, dtype=float)

    @property
    def row_totals(self) -> Tuple[int, ...]:
        return tuple(sum(row) for row in self.counts)

    @property
    def column_totals(self) -> Tuple[int, ...]:
        return tuple(sum(col) for col in zip(*self.counts))

    @property
    def total(self) -> int:
        return sum(self.row_totals)

    def count(self, hypothesis: str, grade: str) -> int:
        return self.counts[self.hypotheses.index(hypothesis)][self.grades.index(grade)]


@dataclass(frozen=True)
class LikelihoodMatrix:
    """c[i][j]: likelihood of grade j given hypothesis i. Rows sum to one."""

    criterion_id: str
    hypotheses: Tuple[str, ...]
    grades: Tuple[str, ...]
    entries: Tuple[Tuple[float, ...], ...]

    def __post_init__(self):
        entries = _as_rows(self.entries)
        object.__setattr__(self, "hypotheses", tuple(self.hypotheses))
        object.__setattr__(self, "grades", tuple(self.grades))
        object.__setattr__(self, "entries", entries)
        for hypothesis, row in zip(self.hypotheses, entries):
            if any(not 0.0 <= v <= 1.0 for v in row):
                raise ValidationFailure(f"likelihoods for {hypothesis} must lie in [0, 1]", value=list(row))
            if abs(sum(row) - 1.0) > STOCHASTIC_TOLERANCE:
                raise ValidationFailure(f"likelihoods for {hypothesis} must sum to 1", value=sum(row))

    def to_numpy(self) -> np.ndarray:
        return np.array(self.entries, dtype=float)

    def value(self, hypothesis: str, grade: str) -> float:
        return self.entries[self.hypotheses.index(hypothesis)][self.grades.index(grade)]

    def column(self, grade: str) -> Tuple[float, ...]:
        j = self.grades.index(canonical_grade(self.grades, grade))
        return tuple(row[j] for row in self.entries)


@dataclass(frozen=True)
class BeliefMatrix:
    """
    p[i][j]: belief that grade j points to hypothesis i. Columns sum to one.

    rounding is None for full precision or 4 when entries were rounded to
    four decimals (the precision calibration tables are usually printed at).
    """

    criterion_id: str
    hypotheses: Tuple[str, ...]
    grades: Tuple[str, ...]
    entries: Tuple[Tuple[float, ...], ...]
    rounding: Optional[int] = None

    def __post_init__(self):
        entries = _as_rows(self.entries)
        object.__setattr__(self, "hypotheses", tuple(self.hypotheses))
        object.__setattr__(self, "grades", tuple(self.grades))
        object.__setattr__(self, "entries", entries)
        if self.rounding not in ROUNDING_CHOICES:
            raise ValidationFailure("belief matrix rounding must be none or 4", value=self.rounding)
        for j, grade in enumerate(self.grades):
            column = [row[j] for row in entries]
            if any(not 0.0 <= v <= 1.0 for v in column):
                raise ValidationFailure(f"beliefs for grade {grade!r} must lie in [0, 1]", value=column)
            if abs(sum(column) - 1.0) > STOCHASTIC_TOLERANCE:
                raise ValidationFailure(f"beliefs for grade {grade!r} must sum to 1", value=sum(column))

    def to_numpy(self) -> np.ndarray:
        return np.array(self.entries, dtype=float)

    def value(self, hypothesis: str, grade: str) -> float:
        return self.entries[self.hypotheses.index(hypothesis)][self.grades.index(grade)]

    @property
    def frame(self) -> Frame:
        return Frame(self.hypotheses)


def tally(records: Iterable[HistoryRecord], criterion_id: str, frame: Frame, grades: Sequence[str]) -> CountTable:
    """Step 1: count assessments per outcome and grade for one criterion."""
    rows: List[Dict[str, str]] = []
    for record in records:
        if record.criterion_id != criterion_id:
            continue
        try:
            grade = canonical_grade(grades, record.grade)
        except ValidationFailure as exc:
            raise CalibrationError(exc.message, line=record.line, value=record.grade) from None
        if record.outcome not in frame.hypotheses:
            raise CalibrationError(
                f"unknown outcome, expected one of {list(frame.hypotheses)}",
                line=record.line,
                value=record.outcome,
            )
        rows.append({"outcome": record.outcome, "grade": grade})
    if not rows:
        raise CalibrationError(f"no history records for criterion {criterion_id!r}")

    history = pd.DataFrame(rows)
    table = pd.crosstab(history["outcome"], history["grade"]).reindex(
        index=list(frame.hypotheses), columns=list(grades), fill_value=0
    )
    counts = table.to_numpy(dtype=int)
    for hypothesis, row in zip(frame.hypotheses, counts):
        if row.sum() == 0:
            raise CalibrationError(f"criterion {criterion_id!r} has no history for outcome {hypothesis!r}")
    return CountTable(criterion_id, frame.hypotheses, tuple(grades), counts.tolist())


def likelihoods(t: CountTable) -> LikelihoodMatrix:
    """Step 2: c[i][j] = count[i][j] / row_total[i]."""
    counts = t.to_numpy()
    totals = counts.sum(axis=1)
    for hypothesis, total in zip(t.hypotheses, totals):
        if total <= 0:
            raise CalibrationError(f"criterion {t.criterion_id!r} has no history for outcome {hypothesis!r}")
    return LikelihoodMatrix(t.criterion_id, t.hypotheses, t.grades, (counts / totals[:, None]).tolist())


def _quantize(value: float, places: int) -> Decimal:
    return Decimal(repr(float(value))).quantize(Decimal(1).scaleb(-places), rounding=ROUND_HALF_UP)


def round_half_up(value: float, places: int = 4) -> float:
    return float(_quantize(value, places))


def _round_column(column: np.ndarray, places: int) -> List[float]:
    rounded = [_quantize(v, places) for v in column]
    # Rounding residue goes to the largest entry so the column still sums to one.
    residue = Decimal(1) - sum(rounded)
    if residue:
        largest = max(range(len(rounded)), key=lambda i: rounded[i])
        rounded[largest] += residue
    return [float(v) for v in rounded]


def beliefs_from_likelihoods(c: LikelihoodMatrix, rounding: Optional[int] = None) -> BeliefMatrix:
    """Step 3: p[i][j] = c[i][j] / sum_n c[n][j], optionally rounded half-up."""
    if rounding not in ROUNDING_CHOICES:
        raise ValidationFailure("belief matrix rounding must be none or 4", value=rounding)
    values = c.to_numpy()
    sums = values.sum(axis=0)
    for grade, total in zip(c.grades, sums):
        if total <= 0.0:
            raise CalibrationError(
                f"grade {grade!r} of criterion {c.criterion_id!r} was never observed in history",
                value=grade,
            )
    beliefs = values / sums[None, :]
    if rounding is not None:
        beliefs = np.array([_round_column(beliefs[:, j], rounding) for j in range(beliefs.shape[1])]).T
    return BeliefMatrix(c.criterion_id, c.hypotheses, c.grades, beliefs.tolist(), rounding=rounding)


def grade_to_bd(m: BeliefMatrix, grade: str) -> BeliefDistribution:
    """Step 4: the belief distribution a grade stands for."""
    try:
        j = m.grades.index(canonical_grade(m.grades, grade))
    except ValidationFailure as exc:
        raise ValidationFailure(f"{exc.message} for criterion {m.criterion_id!r}", value=grade) from None
    frame = m.frame
    return BeliefDistribution(frame, {1 << i: row[j] for i, row in enumerate(m.entries)})


def calibrate(
    records: Iterable[HistoryRecord],
    criterion_id: str,
    frame: Frame,
    grades: Sequence[str],
    rounding: Optional[int] = None,
) -> Tuple[CountTable, LikelihoodMatrix, BeliefMatrix]:
    """Run steps 1-3 for one criterion."""
    table = tally(records, criterion_id, frame, grades)
    likelihood = likelihoods(table)
    return table, likelihood, beliefs_from_likelihoods(likelihood, rounding)


def records_from_counts(tables: Sequence[CountTable], experts_per_project: int = 5, expert_pool: int = 50) -> List[HistoryRecord]:
    """
    Build a history whose tallies reproduce the given count tables.

    Every table must share hypotheses and row totals: each assessment slot
    carries one grade per criterion. Slots of one outcome are cut into
    projects of `experts_per_project` (the last project takes the rest) and
    experts are assigned round-robin from a pool.
    """
    if not tables:
        raise ValidationFailure("need at least one count table")
    hypotheses = tables[0].hypotheses
    totals = tables[0].row_totals
    for table in tables[1:]:
        if table.hypotheses != hypotheses or table.row_totals != totals:
            raise ValidationFailure(
                "count tables disagree on outcomes or row totals",
                value=table.criterion_id,
            )
    if experts_per_project < 1 or expert_pool < experts_per_project:
        raise ValidationFailure("expert pool must cover one project's panel", value=expert_pool)

    records: List[HistoryRecord] = []
    project_no = 0
    slot_no = 0
    for i, hypothesis in enumerate(hypotheses):
        expanded = [
            [grade for grade, n in zip(table.grades, table.counts[i]) for _ in range(n)]
            for table in tables
        ]
        for start in range(0, totals[i], experts_per_project):
            project_no += 1
            project_id = f"H{project_no:04d}"
            for slot in range(start, min(start + experts_per_project, totals[i])):
                expert_id = f"X{slot_no % expert_pool + 1:03d}"
                slot_no += 1
                for table, grades in zip(tables, expanded):
                    records.append(HistoryRecord(project_id, expert_id, table.criterion_id, grades[slot], hypothesis))
    return records
