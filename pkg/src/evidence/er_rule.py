"""
Evidential reasoning (ER) rule.

Evidence is discounted into an ExtendedMass (weighted beliefs plus the
residual 1 - r), folded pairwise with the orthogonal sum and normalized once
at the end. RESIDUAL is the neutral element of the fold, so any number of
pieces of evidence can be combined in any order. The per-evidence factor
1 / (1 + w - r) of the two-piece formulation scales every entry of a
discounted mass uniformly and cancels in the final normalization, so it is
not applied.
"""
import logging
from collections import defaultdict
from functools import reduce
from typing import Callable, Dict, Iterable, Sequence

from src.errors import CompleteConflictError, NoEffectiveEvidenceError, ValidationFailure
from src.evidence.belief import BeliefDistribution, Evidence, ExtendedMass
from src.evidence.frame import EMPTY, RESIDUAL, Proposition, intersect
from src.observability import EVIDENCE_COMBINED, log_event

ER = "er"
SHAFER = "shafer"
DISCOUNTING_RULES = (ER, SHAFER)


def discount(e: Evidence) -> ExtendedMass:
    """m(theta) = w * p(theta); the residual 1 - r waits on the power set."""
    masses = {mask: e.weight * p for mask, p in e.bd.masses.items()}
    return ExtendedMass(e.frame, masses, residual=1.0 - e.reliability)


def shafer_discount(e: Evidence) -> ExtendedMass:
    """
    Classical discounting: m(theta) = r * p(theta) and the remainder 1 - r
    goes to the whole frame as global ignorance. Weight is not used.
    """
    frame = e.frame
    masses: Dict[Proposition, float] = {mask: e.reliability * p for mask, p in e.bd.masses.items()}
    masses[frame.full] = masses.get(frame.full, 0.0) + (1.0 - e.reliability)
    return ExtendedMass(frame, masses, residual=0.0)


def orthogonal_sum(a: ExtendedMass, b: ExtendedMass) -> ExtendedMass:
    """
    Conjunctive, unnormalized combination of two extended masses.

    Products landing on the empty set are discarded. RESIDUAL x RESIDUAL
    stays on RESIDUAL; RESIDUAL x A lands on A.
    """
    if a.frame != b.frame:
        raise ValidationFailure(
            "cannot combine evidence defined on different frames",
            value=f"{list(a.frame.hypotheses)} vs {list(b.frame.hypotheses)}",
        )
    out: Dict[Proposition, float] = defaultdict(float)
    for set_a, mass_a in a.items():
        if mass_a == 0.0:
            continue
        for set_b, mass_b in b.items():
            if mass_b == 0.0:
                continue
            joint = intersect(set_a, set_b)
            if joint == EMPTY:
                continue
            out[joint] += mass_a * mass_b
    residual = out.pop(RESIDUAL, 0.0)
    conflict = residual == 0.0 and not any(v > 0.0 for v in out.values())
    return ExtendedMass(a.frame, dict(out), residual=residual, total_conflict=conflict)


def normalize(m: ExtendedMass) -> BeliefDistribution:
    """Rescale in-frame masses to sum to one; RESIDUAL is left out entirely."""
    total = m.in_frame_total()
    if not total > 0.0:
        raise CompleteConflictError("complete conflict / no effective evidence")
    return BeliefDistribution(m.frame, {mask: value / total for mask, value in m.masses.items()})


def _discounter(rule: str) -> Callable[[Evidence], ExtendedMass]:
    if rule == ER:
        return discount
    if rule == SHAFER:
        return shafer_discount
    raise ValidationFailure(f"unknown discounting rule, expected one of {DISCOUNTING_RULES}", value=rule)


def fold(evidence: Iterable[Evidence], rule: str = ER) -> ExtendedMass:
    """Discount and orthogonally sum evidence without normalizing."""
    items = list(evidence)
    if not items:
        raise NoEffectiveEvidenceError("no evidence to combine")
    frame = items[0].frame
    for e in items[1:]:
        if e.frame != frame:
            raise ValidationFailure(
                "cannot combine evidence defined on different frames",
                value=f"{list(frame.hypotheses)} vs {list(e.frame.hypotheses)}",
            )
    effective = [e for e in items if e.weight > 0.0]
    dropped = len(items) - len(effective)
    if dropped:
        log_event("evidence_dropped", level=logging.DEBUG, count=dropped)
    if not effective:
        raise NoEffectiveEvidenceError("complete conflict / no effective evidence: every item has zero weight")
    discounter = _discounter(rule)
    EVIDENCE_COMBINED.inc(len(effective))
    return reduce(orthogonal_sum, (discounter(e) for e in effective))


def combine(evidence: Sequence[Evidence], rule: str = ER) -> BeliefDistribution:
    """
    Combine evidence with the ER rule (or Shafer discounting when asked).

    Zero-weight items are dropped before folding; the result does not depend
    on the order of the input.
    """
    return normalize(fold(evidence, rule))


def dempster_combine(bds: Sequence[BeliefDistribution]) -> BeliefDistribution:
    """Dempster's rule: the ER rule with every piece fully weighted and reliable."""
    return combine([Evidence(bd, 1.0, 1.0) for bd in bds])

