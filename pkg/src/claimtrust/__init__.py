"""Trust propagation over claim-linked document graphs.

The pipeline: ingest a corpus, extract claims per document, embed and mine
similar claim pairs, classify each pair as supporting/refuting/unrelated,
aggregate the verdicts into a signed document graph, propagate trust from
seed documents by damped fixed-point iteration, and use the resulting
scores to re-rank retrieval results.
"""

__version__ = "0.1.0"

from .model import (
    Claim,
    Document,
    Relation,
    Seed,
    TrustConfig,
    TrustScores,
)
from .solver import claimrank

__all__ = [
    "Claim",
    "Document",
    "Relation",
    "Seed",
    "TrustConfig",
    "TrustScores",
    "claimrank",
    "__version__",
]
