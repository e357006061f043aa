"""
Frames of discernment and propositions.

A proposition is a bitmask over the frame's hypotheses. Bit i set means
hypothesis i belongs to the subset. RESIDUAL is the out-of-frame marker for
the power-set residue that holds undiscounted mass (1 - r) while evidence
is being folded.
"""
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence, Tuple, Union

from src.errors import ValidationFailure

MIN_HYPOTHESES = 2
MAX_HYPOTHESES = 16

EMPTY = 0
RESIDUAL = -1

Proposition = int
LabelOrSubset = Union[str, Sequence[str], frozenset]


def intersect(a: Proposition, b: Proposition) -> Proposition:
    """Set intersection with RESIDUAL acting as the neutral element."""
    if a == RESIDUAL:
        return b
    if b == RESIDUAL:
        return a
    return a & b


@dataclass(frozen=True)
class Frame:
    """Ordered, mutually exclusive and exhaustive hypotheses."""

    hypotheses: Tuple[str, ...]

    def __post_init__(self):
        labels = tuple(self.hypotheses)
        object.__setattr__(self, "hypotheses", labels)
        if not MIN_HYPOTHESES <= len(labels) <= MAX_HYPOTHESES:
            raise ValidationFailure(
                f"frame needs between {MIN_HYPOTHESES} and {MAX_HYPOTHESES} hypotheses, got {len(labels)}",
                value=list(labels),
            )
        seen = set()
        for label in labels:
            if not isinstance(label, str) or not label.strip():
                raise ValidationFailure("hypothesis labels must be non-empty text", value=label)
            if label in seen:
                raise ValidationFailure("duplicate hypothesis label", value=label)
            seen.add(label)

    @property
    def size(self) -> int:
        return len(self.hypotheses)

    @property
    def full(self) -> Proposition:
        """The whole frame Theta as a bitmask."""
        return (1 << self.size) - 1

    def index(self, label: str) -> int:
        try:
            return self.hypotheses.index(label)
        except ValueError:
            raise ValidationFailure("unknown hypothesis label", value=label) from None

    def singleton(self, label: str) -> Proposition:
        return 1 << self.index(label)

    def singletons(self) -> Iterator[Proposition]:
        for i in range(self.size):
            yield 1 << i

    def subset(self, labels: LabelOrSubset) -> Proposition:
        """Bitmask for one label or for a collection of labels."""
        if isinstance(labels, str):
            return self.singleton(labels)
        mask = EMPTY
        for label in labels:
            mask |= self.singleton(label)
        if mask == EMPTY:
            raise ValidationFailure("the empty set cannot carry mass", value=list(labels))
        return mask

    def labels_of(self, proposition: Proposition) -> Tuple[str, ...]:
        if proposition == RESIDUAL:
            return ()
        return tuple(label for i, label in enumerate(self.hypotheses) if proposition >> i & 1)

    def describe(self, proposition: Proposition) -> str:
        """Stable text key: a bare label for singletons, {a,b} otherwise."""
        if proposition == RESIDUAL:
            return "P(Theta)"
        labels = self.labels_of(proposition)
        if len(labels) == 1:
            return labels[0]
        return "{" + ",".join(labels) + "}"

    def parse(self, key: str) -> Proposition:
        """Inverse of describe() for in-frame propositions."""
        key = key.strip()
        if key.startswith("{") and key.endswith("}"):
            return self.subset([part.strip() for part in key[1:-1].split(",")])
        return self.singleton(key)

    def contains(self, proposition: Proposition) -> bool:
        return proposition != RESIDUAL and EMPTY < proposition <= self.full


def make_frame(labels: Iterable[str]) -> Frame:
    return Frame(tuple(labels))
