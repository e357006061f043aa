from src.ranking.ranking import (
    HistogramBin,
    HistogramData,
    ProjectScore,
    RankedEntry,
    Selection,
    TopKReport,
    additive_score,
    histogram,
    rank,
    score_projects,
    select_top,
    topk_outcomes,
)

__all__ = [
    "HistogramBin",
    "HistogramData",
    "ProjectScore",
    "RankedEntry",
    "Selection",
    "TopKReport",
    "additive_score",
    "histogram",
    "rank",
    "score_projects",
    "select_top",
    "topk_outcomes",
]
