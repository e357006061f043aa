"""
Ranking and comparison against the additive baseline.

Ties are never broken silently: every ranked entry carries its tie group,
and a top-k cut that falls inside a tie group leaves those slots
undifferentiated.
"""
import math
from collections import defaultdict
from dataclasses import dataclass
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from src.aggregation.pipeline import Assessment, ProjectEvaluation
from src.calibration.tables import canonical_grade
from src.errors import ValidationFailure

TIE_DECIMALS = 9
RANK_KEYS = ("y", "x")


@dataclass(frozen=True)
class ProjectScore:
    project_id: str
    y: float
    x: float
    rank_y: int = 0
    rank_x: int = 0
    outcome: Optional[str] = None
    tie_size_y: int = 1
    tie_size_x: int = 1

    def __post_init__(self):
        if not 0.0 <= self.y <= 1.0 + 1e-12:
            raise ValidationFailure("funding probability must lie in [0, 1]", value=self.y)


@dataclass(frozen=True)
class RankedEntry:
    """
    One project in a ranking.

    position is the 1-based place in sorted order; rank is the dense rank
    shared by every member of the tie group, and doubles as the group id.
    """

    project_id: str
    score: float
    position: int
    rank: int
    tie_size: int
    outcome: Optional[str] = None

    @property
    def tie_group(self) -> int:
        return self.rank

    @property
    def tied(self) -> bool:
        return self.tie_size > 1


@dataclass(frozen=True)
class TopKReport:
    k: int
    funded_count: int
    unfunded_count: int
    undifferentiated_count: int


@dataclass(frozen=True)
class Selection:
    selected: Tuple[str, ...]
    undecided: Tuple[str, ...]
    open_slots: int


@dataclass(frozen=True)
class HistogramBin:
    lower: float
    upper: float
    funded: int = 0
    unfunded: int = 0
    unknown: int = 0

    @property
    def total(self) -> int:
        return self.funded + self.unfunded + self.unknown


@dataclass(frozen=True)
class HistogramData:
    bin_width: float
    bins: Tuple[HistogramBin, ...]

    @property
    def total(self) -> int:
        return sum(b.total for b in self.bins)

    def occupied(self) -> Tuple[HistogramBin, ...]:
        return tuple(b for b in self.bins if b.total)


def _tie_key(value: float) -> float:
    return round(value, TIE_DECIMALS)


def additive_score(assessments: Sequence[Assessment], score_maps: Mapping[str, Mapping[str, float]]) -> float:
    """Baseline: mean grade score per criterion, summed over criteria."""
    by_criterion: Dict[str, List[float]] = defaultdict(list)
    for a in assessments:
        if a.criterion_id not in score_maps:
            continue
        scale = score_maps[a.criterion_id]
        try:
            grade = canonical_grade(list(scale), a.grade)
        except ValidationFailure as exc:
            raise ValidationFailure(exc.message, line=a.line, value=a.grade) from None
        by_criterion[a.criterion_id].append(float(scale[grade]))
    total = 0.0
    for criterion_id in score_maps:
        scores = by_criterion.get(criterion_id)
        if not scores:
            project = assessments[0].project_id if assessments else "?"
            raise ValidationFailure(f"project {project!r} has no assessments on criterion {criterion_id!r}", value=criterion_id)
        total += math.fsum(scores) / len(scores)
    return total


def rank(scores: Iterable[ProjectScore], key: str = "y") -> List[RankedEntry]:
    """Sort descending by y or x; equal scores share one tie group, listed by project_id."""
    if key not in RANK_KEYS:
        raise ValidationFailure(f"rank key must be one of {RANK_KEYS}", value=key)
    items = sorted(scores, key=lambda s: (-_tie_key(getattr(s, key)), s.project_id))
    if not items:
        raise ValidationFailure("nothing to rank")
    sizes: Dict[float, int] = defaultdict(int)
    for s in items:
        sizes[_tie_key(getattr(s, key))] += 1

    ranked: List[RankedEntry] = []
    dense = 0
    previous = None
    for position, s in enumerate(items, start=1):
        value = _tie_key(getattr(s, key))
        if value != previous:
            dense += 1
            previous = value
        ranked.append(RankedEntry(s.project_id, getattr(s, key), position, dense, sizes[value], s.outcome))
    return ranked


def _boundary_group(ranked: Sequence[RankedEntry], k: int) -> Optional[int]:
    """Tie group cut by the top-k line, if any."""
    if k >= len(ranked):
        return None
    inside, outside = ranked[k - 1], ranked[k]
    return inside.rank if inside.rank == outside.rank else None


def _check_k(ranked: Sequence[RankedEntry], k: int) -> None:
    if not 1 <= k <= len(ranked):
        raise ValidationFailure(f"k must lie in [1, {len(ranked)}]", value=k)


def topk_outcomes(ranked: Sequence[RankedEntry], k: int, funded: str = "Funded") -> TopKReport:
    """Actual outcomes of the top k; slots held by a straddling tie group are undifferentiated."""
    _check_k(ranked, k)
    straddling = _boundary_group(ranked, k)
    funded_count = unfunded_count = undifferentiated = 0
    for entry in ranked[:k]:
        if entry.outcome is None:
            raise ValidationFailure("top-k tally needs the actual outcome of every project", value=entry.project_id)
        if entry.rank == straddling:
            undifferentiated += 1
        elif entry.outcome == funded:
            funded_count += 1
        else:
            unfunded_count += 1
    return TopKReport(k, funded_count, unfunded_count, undifferentiated)


def select_top(ranked: Sequence[RankedEntry], k: int) -> Selection:
    """Projects decided to be inside the top k, plus the tie group still competing for the last slots."""
    _check_k(ranked, k)
    straddling = _boundary_group(ranked, k)
    selected = tuple(e.project_id for e in ranked[:k] if e.rank != straddling)
    undecided = tuple(e.project_id for e in ranked if straddling is not None and e.rank == straddling)
    return Selection(selected, undecided, k - len(selected))


def histogram(
    scores: Sequence[Tuple[float, Optional[str]]],
    bin_width: float,
    funded: str = "Funded",
) -> HistogramData:
    """Counts of funded / unfunded / unlabelled projects per score bin, anchored at the minimum score."""
    if not bin_width > 0:
        raise ValidationFailure("histogram bin width must be positive", value=bin_width)
    if not scores:
        raise ValidationFailure("histogram needs at least one score")
    values = np.array([s for s, _ in scores], dtype=float)
    low = float(values.min())
    index = np.floor(np.round((values - low) / bin_width, TIE_DECIMALS)).astype(int)
    n_bins = int(index.max()) + 1

    counts = np.zeros((n_bins, 3), dtype=int)
    for i, (_, outcome) in zip(index, scores):
        column = 2 if outcome is None else (0 if outcome == funded else 1)
        counts[i, column] += 1
    bins = tuple(
        HistogramBin(
            lower=round(low + i * bin_width, TIE_DECIMALS),
            upper=round(low + (i + 1) * bin_width, TIE_DECIMALS),
            funded=int(row[0]),
            unfunded=int(row[1]),
            unknown=int(row[2]),
        )
        for i, row in enumerate(counts)
    )
    return HistogramData(bin_width, bins)


def score_projects(
    evaluations: Sequence[ProjectEvaluation],
    projects: Mapping[str, Sequence[Assessment]],
    score_maps: Mapping[str, Mapping[str, float]],
    outcomes: Optional[Mapping[str, str]] = None,
) -> List[ProjectScore]:
    """Join ER funding probability y with the baseline x and rank both ways."""
    outcomes = outcomes or {}
    base = [
        ProjectScore(
            project_id=e.project_id,
            y=e.y,
            x=additive_score(projects[e.project_id], score_maps),
            outcome=outcomes.get(e.project_id),
        )
        for e in evaluations
    ]
    by_y = {r.project_id: r for r in rank(base, "y")}
    by_x = {r.project_id: r for r in rank(base, "x")}
    return sorted(
        (
            ProjectScore(
                project_id=s.project_id,
                y=s.y,
                x=s.x,
                rank_y=by_y[s.project_id].rank,
                rank_x=by_x[s.project_id].rank,
                outcome=s.outcome,
                tie_size_y=by_y[s.project_id].tie_size,
                tie_size_x=by_x[s.project_id].tie_size,
            )
            for s in base
        ),
        key=lambda s: s.project_id,
    )
