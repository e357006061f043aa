"""
Bayesian posterior over singleton hypotheses.

Used as the independent reference the ER rule must agree with when evidence
is fully reliable and read from a likelihood-derived belief matrix.
"""
from typing import Sequence

import numpy as np

from src.errors import CompleteConflictError, ValidationFailure
from src.evidence.belief import BeliefDistribution, PriorEvidence


def bayes_posterior(prior: PriorEvidence, likelihood_columns: Sequence[Sequence[float]]) -> BeliefDistribution:
    """p(h_i | e_1..e_J) proportional to p(h_i) * prod_j c(e_j | h_i)."""
    frame = prior.frame
    posterior = np.array(prior.singleton_vector(), dtype=float)
    for position, column in enumerate(likelihood_columns):
        values = np.asarray(column, dtype=float)
        if values.shape != (frame.size,):
            raise ValidationFailure(
                f"likelihood column {position} needs one entry per hypothesis ({frame.size})",
                value=list(column),
            )
        if np.any(np.isnan(values)) or np.any(values < 0.0):
            raise ValidationFailure(f"likelihood column {position} has negative entries", value=list(column))
        if not np.any(values > 0.0):
            raise ValidationFailure(f"likelihood column {position} is all zero", value=list(column))
        posterior = posterior * values
    total = float(posterior.sum())
    if not total > 0.0:
        raise CompleteConflictError("posterior is all zero: likelihoods contradict the prior")
    return BeliefDistribution(
        frame,
        {mask: float(p) / total for mask, p in zip(frame.singletons(), posterior) if p > 0.0},
    )
