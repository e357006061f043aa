import math
from itertools import product

import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from src.errors import CompleteConflictError, NoEffectiveEvidenceError, ValidationFailure
from src.evidence import (
    RESIDUAL,
    BeliefDistribution,
    Evidence,
    ExtendedMass,
    PriorEvidence,
    bayes_posterior,
    combine,
    dempster_combine,
    discount,
    fold,
    make_frame,
    normalize,
    orthogonal_sum,
    shafer_discount,
)

BINARY = make_frame(["Funded", "Unfunded"])
PROPERTY = settings(max_examples=1000, deadline=None)


def bd(funded: float) -> BeliefDistribution:
    return BeliefDistribution.from_labels(BINARY, {"Funded": funded, "Unfunded": 1.0 - funded})


# ===== EXAMPLES =====

def test_frame_describe_and_parse():
    frame = make_frame(["a", "b", "c"])
    mask = frame.subset(["a", "c"])
    assert frame.describe(mask) == "{a,c}"
    assert frame.parse("{a,c}") == mask
    assert frame.describe(frame.singleton("b")) == "b"
    assert frame.describe(RESIDUAL) == "P(Theta)"


def test_frame_rejects_bad_labels():
    with pytest.raises(ValidationFailure):
        make_frame(["only"])
    with pytest.raises(ValidationFailure):
        make_frame(["a", "a"])


def test_belief_distribution_must_sum_to_one():
    with pytest.raises(ValidationFailure):
        BeliefDistribution.from_labels(BINARY, {"Funded": 0.5, "Unfunded": 0.4})


def test_discount_keeps_residual_apart():
    m = discount(Evidence(bd(0.2), 0.5, 0.5))
    assert m.mass("Funded") == pytest.approx(0.1)
    assert m.mass("Unfunded") == pytest.approx(0.4)
    assert m.residual == pytest.approx(0.5)
    assert m.mass(BINARY.full) == 0.0


def test_shafer_discount_moves_remainder_to_frame():
    m = shafer_discount(Evidence(bd(0.2), 1.0, 0.5))
    assert m.mass("Funded") == pytest.approx(0.1)
    assert m.mass("Unfunded") == pytest.approx(0.4)
    assert m.mass(BINARY.full) == pytest.approx(0.5)
    assert m.residual == 0.0


def test_two_experts_normalized_reliability():
    # w = r = 0.25 / 1.1 and 0.85 / 1.1
    total = 0.25 + 0.85
    result = combine([Evidence(bd(0.2), 0.25 / total, 0.25 / total), Evidence(bd(0.7), 0.85 / total, 0.85 / total)])
    assert result.probability("Funded") == pytest.approx(0.633, abs=1e-3)
    assert result.probability("Unfunded") == pytest.approx(0.367, abs=1e-3)


def test_two_expert_masses_step_by_step():
    low = discount(Evidence(bd(0.2), 0.25, 0.25))
    assert (low.mass("Funded"), low.mass("Unfunded"), low.residual) == pytest.approx((0.05, 0.20, 0.75))
    high = discount(Evidence(bd(0.7), 0.85, 0.85))
    assert (high.mass("Funded"), high.mass("Unfunded"), high.residual) == pytest.approx((0.595, 0.255, 0.15))

    joint = orthogonal_sum(low, high)
    assert joint.mass("Funded") == pytest.approx(0.4835, abs=1e-12)
    assert joint.mass("Unfunded") == pytest.approx(0.27225, abs=1e-12)
    assert joint.residual == pytest.approx(0.1125, abs=1e-12)

    result = normalize(joint)
    assert result.probability("Funded") == pytest.approx(0.63976, abs=1e-5)
    assert result.probability("Unfunded") == pytest.approx(0.36024, abs=1e-5)


def test_single_fully_reliable_evidence_is_identity():
    result = combine([Evidence(bd(0.8219), 1.0, 1.0)])
    assert result.probability("Funded") == pytest.approx(0.8219, abs=1e-12)


def test_single_partly_reliable_evidence_keeps_its_shape():
    result = combine([Evidence(bd(0.3), 0.4, 0.4)])
    assert result.probability("Funded") == pytest.approx(0.3, abs=1e-12)


def test_zero_weight_evidence_is_dropped():
    strong = Evidence(bd(0.6), 0.7, 0.7)
    vacuous = Evidence(bd(0.01), 0.0, 0.0)
    with_vacuous = combine([strong, vacuous])
    alone = combine([strong])
    assert with_vacuous.probability("Funded") == pytest.approx(alone.probability("Funded"), abs=1e-12)


def test_all_zero_weight_is_no_effective_evidence():
    with pytest.raises(NoEffectiveEvidenceError):
        combine([Evidence(bd(0.5), 0.0, 0.0), Evidence(bd(0.2), 0.0, 0.3)])


def test_empty_evidence_list():
    with pytest.raises(NoEffectiveEvidenceError):
        combine([])


def test_total_conflict_is_reported():
    funded = BeliefDistribution.from_labels(BINARY, {"Funded": 1.0})
    unfunded = BeliefDistribution.from_labels(BINARY, {"Unfunded": 1.0})
    with pytest.raises(CompleteConflictError, match="complete conflict"):
        dempster_combine([funded, unfunded])


def test_frames_must_match():
    other = make_frame(["x", "y"])
    e1 = Evidence(bd(0.5), 1.0, 1.0)
    e2 = Evidence(BeliefDistribution.from_labels(other, {"x": 1.0}), 1.0, 1.0)
    with pytest.raises(ValidationFailure):
        combine([e1, e2])


def test_evidence_rejects_out_of_range_reliability():
    with pytest.raises(ValidationFailure):
        Evidence(bd(0.5), 0.5, 1.2)


def test_dempster_matches_textbook_example():
    frame = make_frame(["a", "b", "c"])
    m1 = BeliefDistribution.from_labels(frame, {"a": 0.6, ("a", "b"): 0.4})
    m2 = BeliefDistribution.from_labels(frame, {"b": 0.5, ("b", "c"): 0.5})
    result = dempster_combine([m1, m2])
    # conflict K = 0.6 * 1.0; b gets 0.4 * 0.5 + 0.4 * 0.5
    assert result.mass("b") == pytest.approx(1.0)


def test_shafer_rule_differs_from_er_rule():
    evidence = [Evidence(bd(0.2), 0.5, 0.5), Evidence(bd(0.7), 0.5, 0.5)]
    er = combine(evidence)
    shafer = combine(evidence, "shafer")
    assert shafer.mass(BINARY.full) > 0.0
    assert er.mass(BINARY.full) == 0.0


def test_unknown_discounting_rule():
    with pytest.raises(ValidationFailure):
        combine([Evidence(bd(0.5), 1.0, 1.0)], "yager")


def test_bayes_posterior_small_case():
    prior = PriorEvidence.uniform(BINARY)
    posterior = bayes_posterior(prior, [[0.8, 0.4], [0.5, 0.5]])
    assert posterior.probability("Funded") == pytest.approx(2 / 3)


def test_bayes_posterior_two_criteria_columns():
    # Funded/Unfunded likelihoods of "Excellent" and "Fund with priority"
    posterior = bayes_posterior(PriorEvidence.uniform(BINARY), [[0.4641, 0.1006], [0.3373, 0.0588]])
    assert posterior.probability("Funded") == pytest.approx(0.9636, abs=1e-4)


def test_certain_prior_is_never_moved():
    prior = PriorEvidence(BINARY, {BINARY.singleton("Funded"): 1.0})
    assert bayes_posterior(prior, [[0.3, 0.7], [0.1, 0.9]]).probability("Funded") == 1.0
    result = combine([Evidence(prior, 1.0, 1.0), Evidence(bd(0.2), 1.0, 1.0), Evidence(bd(0.2), 0.5, 0.5)])
    assert result.probability("Funded") == pytest.approx(1.0, abs=1e-12)
    assert result.mass("Unfunded") == 0.0


def test_bayes_posterior_rejects_wrong_shape():
    with pytest.raises(ValidationFailure):
        bayes_posterior(PriorEvidence.uniform(BINARY), [[0.5, 0.2, 0.3]])


def test_prior_must_be_singleton_only():
    with pytest.raises(ValidationFailure):
        PriorEvidence(BINARY, {BINARY.full: 1.0})


# ===== PROPERTIES =====

frames = st.integers(min_value=2, max_value=4).map(lambda n: make_frame([f"h{i}" for i in range(n)]))


@st.composite
def belief_distributions(draw, frame, singletons_only=False):
    if singletons_only:
        masks = list(frame.singletons())
    else:
        masks = draw(st.lists(st.integers(min_value=1, max_value=frame.full), min_size=1, max_size=4, unique=True))
    raw = draw(st.lists(st.floats(min_value=0.01, max_value=1.0), min_size=len(masks), max_size=len(masks)))
    total = math.fsum(raw)
    return BeliefDistribution(frame, {m: v / total for m, v in zip(masks, raw)})


@st.composite
def evidence_lists(draw, min_size=1, max_size=5):
    frame = draw(frames)
    n = draw(st.integers(min_value=min_size, max_value=max_size))
    items = []
    for _ in range(n):
        items.append(
            Evidence(
                draw(belief_distributions(frame)),
                draw(st.floats(min_value=0.01, max_value=1.0)),
                draw(st.floats(min_value=0.0, max_value=0.99)),
            )
        )
    return items


def _close(a: ExtendedMass, b: ExtendedMass, tol: float) -> bool:
    keys = set(a.masses) | set(b.masses)
    return all(abs(a.mass(k) - b.mass(k)) <= tol for k in keys) and abs(a.residual - b.residual) <= tol


def _direct_dempster(frame, bds):
    """Frozenset implementation, independent of the bitmask kernel."""
    def as_sets(d):
        return {frozenset(frame.labels_of(mask)): v for mask, v in d.masses.items()}

    current = as_sets(bds[0])
    for nxt in bds[1:]:
        joint = {}
        for (a, va), (b, vb) in product(current.items(), as_sets(nxt).items()):
            inter = a & b
            if inter:
                joint[inter] = joint.get(inter, 0.0) + va * vb
        current = joint
    total = math.fsum(current.values())
    return {k: v / total for k, v in current.items()}, total


@pytest.mark.property
@PROPERTY
@given(evidence_lists(min_size=2), st.data())
def test_combine_is_permutation_invariant(items, data):
    shuffled = data.draw(st.permutations(items))
    a, b = combine(items), combine(shuffled)
    for mask in set(a.masses) | set(b.masses):
        assert abs(a.mass(mask) - b.mass(mask)) <= 1e-9


@pytest.mark.property
@PROPERTY
@given(evidence_lists(min_size=3, max_size=3))
def test_orthogonal_sum_is_associative(items):
    a, b, c = (discount(e) for e in items)
    left = orthogonal_sum(orthogonal_sum(a, b), c)
    right = orthogonal_sum(a, orthogonal_sum(b, c))
    assert _close(left, right, 1e-12)


@pytest.mark.property
@PROPERTY
@given(evidence_lists())
def test_residual_is_product_of_unreliabilities(items):
    expected = math.prod(1.0 - e.reliability for e in items)
    assert abs(fold(items).residual - expected) <= 1e-12


@pytest.mark.property
@PROPERTY
@given(evidence_lists())
def test_combined_output_is_normalized(items):
    result = combine(items)
    assert abs(math.fsum(result.masses.values()) - 1.0) <= 1e-9
    assert all(0.0 <= v <= 1.0 for v in result.masses.values())


@pytest.mark.property
@PROPERTY
@given(evidence_lists(max_size=3))
def test_vacuous_mass_is_neutral(items):
    folded = fold(items)
    assert _close(orthogonal_sum(folded, ExtendedMass.vacuous(folded.frame)), folded, 1e-15)


@pytest.mark.property
@PROPERTY
@given(st.data())
def test_full_reliability_reduces_to_dempster(data):
    frame = data.draw(frames)
    bds = data.draw(st.lists(belief_distributions(frame), min_size=1, max_size=4))
    expected, agreement = _direct_dempster(frame, bds)
    assume(agreement > 1e-2)
    result = combine([Evidence(d, 1.0, 1.0) for d in bds])
    assert len(result.masses) <= len(expected)
    for key, value in expected.items():
        mask = frame.subset(sorted(key, key=frame.index))
        assert abs(result.mass(mask) - value) <= 1e-12


@pytest.mark.property
@PROPERTY
@given(st.data())
def test_reliable_likelihood_evidence_matches_bayes(data):
    frame = data.draw(frames)
    prior = PriorEvidence(frame, dict(data.draw(belief_distributions(frame, singletons_only=True)).masses))
    columns = data.draw(
        st.lists(
            st.lists(st.floats(min_value=0.05, max_value=1.0), min_size=frame.size, max_size=frame.size),
            min_size=1,
            max_size=5,
        )
    )
    evidence = [Evidence(prior, 1.0, 1.0)]
    for column in columns:
        total = math.fsum(column)
        evidence.append(Evidence(BeliefDistribution(frame, {m: v / total for m, v in zip(frame.singletons(), column)}), 1.0, 1.0))
    er = combine(evidence)
    bayes = bayes_posterior(prior, columns)
    for mask in frame.singletons():
        assert abs(er.mass(mask) - bayes.mass(mask)) <= 1e-12


@pytest.mark.property
@settings(max_examples=200, deadline=None)
@given(evidence_lists())
def test_normalize_ignores_residual(items):
    folded = fold(items)
    result = normalize(folded)
    total = folded.in_frame_total()
    for mask, value in folded.masses.items():
        assert result.mass(mask) == pytest.approx(value / total, abs=1e-12)


@pytest.mark.property
@PROPERTY
@given(evidence_lists(max_size=4), st.data())
def test_zero_weight_evidence_is_neutral(items, data):
    frame = items[0].frame
    silent = Evidence(
        data.draw(belief_distributions(frame)),
        0.0,
        data.draw(st.floats(min_value=0.0, max_value=1.0)),
    )
    position = data.draw(st.integers(min_value=0, max_value=len(items)))
    padded = items[:position] + [silent] + items[position:]
    a, b = combine(items), combine(padded)
    for mask in set(a.masses) | set(b.masses):
        assert abs(a.mass(mask) - b.mass(mask)) <= 1e-12


def test_agreement_reinforces_the_shared_majority():
    total = 2.0 + 1.0
    result = combine([Evidence(bd(0.4), 2.0 / total, 2.0 / total), Evidence(bd(0.4), 1.0 / total, 1.0 / total)])
    assert result.probability("Funded") == pytest.approx(0.3841, abs=1e-4)
    assert combine([Evidence(bd(0.5), 0.7, 0.7), Evidence(bd(0.5), 0.3, 0.3)]).probability("Funded") == pytest.approx(0.5)
