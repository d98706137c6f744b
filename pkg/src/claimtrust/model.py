"""Shared domain types: documents, claims, relations, solver config and scores.

All types are immutable value objects after construction and safe to share
across threads. Construction is permissive for Document (so that corpus
validation can report problems instead of crashing); everything else enforces
its invariants in __post_init__.
"""

import re
from dataclasses import dataclass, field
from datetime import date
from enum import Enum

from .errors import ValidationError
from .text import normalize_whitespace

DOC_ID_PATTERN = re.compile(r"^\d{4}$")

VALID_POLARITIES = (-1, 0, 1)


class Seed(str, Enum):
    """Prior label of a document: a trusted seed or an unknown."""

    TRUSTED = "trusted"
    UNKNOWN = "unknown"


@dataclass(frozen=True)
class Document:
    """A corpus item with a stable zero-padded 4-digit id."""

    id: str
    title: str
    body: str
    published: date | None = None
    seed: Seed = Seed.UNKNOWN

    def violations(self) -> list[str]:
        problems = []
        if not DOC_ID_PATTERN.match(self.id):
            problems.append(f"malformed id: {self.id!r}")
        if not normalize_whitespace(self.body):
            problems.append(f"empty body: {self.id}")
        return problems

    def validate(self) -> None:
        problems = self.violations()
        if problems:
            raise ValidationError(f"invalid document: {'; '.join(problems)}")


@dataclass(frozen=True)
class Claim:
    """A verifiable factual statement extracted from exactly one document.

    claim_id is "<doc_id>-<ordinal>" so a claim can be traced by eye.
    """

    claim_id: str
    doc_id: str
    text: str
    ordinal: int

    def __post_init__(self):
        if not self.text.strip():
            raise ValidationError(f"claim {self.claim_id}: empty text")
        if self.ordinal < 0:
            raise ValidationError(f"claim {self.claim_id}: negative ordinal")


def make_claim_id(doc_id: str, ordinal: int) -> str:
    return f"{doc_id}-{ordinal}"


@dataclass(frozen=True)
class Relation:
    """A classified claim pair: supporting (+1), refuting (-1) or unrelated (0).

    similarity is the cosine score that nominated the pair, kept for audit.
    """

    claim_a: str
    claim_b: str
    polarity: int
    similarity: float

    def __post_init__(self):
        if self.claim_a == self.claim_b:
            raise ValidationError(f"relation pairs a claim with itself: {self.claim_a}")
        if self.polarity not in VALID_POLARITIES:
            raise ValidationError(f"polarity must be -1, 0 or 1, got {self.polarity!r}")
        if not -1.0 <= self.similarity <= 1.0:
            raise ValidationError(f"similarity out of [-1, 1]: {self.similarity!r}")

    @property
    def pair(self) -> tuple[str, str]:
        """The unordered pair as a sorted tuple, for uniqueness checks."""
        return tuple(sorted((self.claim_a, self.claim_b)))


@dataclass(frozen=True)
class TrustConfig:
    """Solver parameters. Defaults: damping 0.85, tolerance 1e-6, neutral 0.5."""

    alpha: float = 0.85
    tolerance: float = 1e-6
    max_iterations: int = 1000
    initial_unknown: float = 0.5
    initial_trusted: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ValidationError(f"alpha must be in (0, 1), got {self.alpha}")
        if self.tolerance <= 0.0:
            raise ValidationError(f"tolerance must be positive, got {self.tolerance}")
        if self.max_iterations < 1:
            raise ValidationError(f"max_iterations must be positive, got {self.max_iterations}")
        if not 0.0 <= self.initial_unknown <= self.initial_trusted <= 1.0:
            raise ValidationError(
                "initial scores must satisfy 0 <= initial_unknown <= initial_trusted <= 1, "
                f"got {self.initial_unknown} and {self.initial_trusted}"
            )


@dataclass(frozen=True)
class TrustScores:
    """Final per-document scores plus how the iteration ended."""

    scores: dict[str, float] = field(default_factory=dict)
    iterations: int = 0
    final_delta: float = 0.0
    converged: bool = False

    def __post_init__(self):
        for doc_id, score in self.scores.items():
            if not 0.0 <= score <= 1.0:
                raise ValidationError(f"score for {doc_id} out of [0, 1]: {score}")


def validate_corpus(documents: list[Document]) -> list[str]:
    """Report-only corpus check: duplicate ids, malformed ids, empty bodies.

    Returns a list of human-readable violations; empty iff the corpus is valid.
    """
    report: list[str] = []
    seen: set[str] = set()
    for doc in documents:
        if doc.id in seen:
            report.append(f"duplicate id: {doc.id}")
        seen.add(doc.id)
        report.extend(doc.violations())
    return report
