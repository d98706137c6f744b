"""Trust-aware re-ranking of retrieval candidates.

Cosine similarity in [-1, 1] is first mapped to sim_norm = (sim + 1) / 2 so
both signals share the [0, 1] scale. Vanilla mode ranks by sim_norm alone;
score mode blends in document trust:

    combined = (1 - lam) * sim_norm + lam * trust

with lam = 0.5 by default. A document with no trust score falls back to the
neutral 0.5 (and is counted). At lam = 0 the blend reproduces the vanilla
ordering bit for bit.
"""

from dataclasses import dataclass

from .errors import ValidationError

MODE_VANILLA = "vanilla"
MODE_SCORE = "score"
MODES = (MODE_VANILLA, MODE_SCORE)

DEFAULT_LAMBDA = 0.5
NEUTRAL_TRUST = 0.5


@dataclass(frozen=True)
class RankedDocument:
    doc_id: str
    similarity: float
    sim_norm: float
    trust: float
    combined: float


def rerank(
    candidates: list[tuple[str, float]],
    trust_scores: dict[str, float],
    mode: str = MODE_SCORE,
    lam: float = DEFAULT_LAMBDA,
    counters: dict | None = None,
) -> list[RankedDocument]:
    """Order (doc_id, similarity) candidates by combined score, best first.

    Ties in combined score break by ascending doc_id, so the output order is
    total and reproducible.
    """
    if mode not in MODES:
        raise ValidationError(f"mode must be one of {MODES}, got {mode!r}")
    if not 0.0 <= lam <= 1.0:
        raise ValidationError(f"lam must be in [0, 1], got {lam}")
    seen: set[str] = set()
    ranked = []
    for doc_id, similarity in candidates:
        if doc_id in seen:
            raise ValidationError(f"duplicate candidate document {doc_id!r}")
        seen.add(doc_id)
        if not -1.0 <= similarity <= 1.0:
            raise ValidationError(
                f"similarity for {doc_id} must be in [-1, 1], got {similarity}"
            )
        sim_norm = (similarity + 1.0) / 2.0
        if doc_id in trust_scores:
            trust = trust_scores[doc_id]
        else:
            trust = NEUTRAL_TRUST
            if counters is not None:
                counters["missing_trust_defaulted"] = (
                    counters.get("missing_trust_defaulted", 0) + 1
                )
        if mode == MODE_VANILLA:
            combined = sim_norm
        else:
            combined = (1.0 - lam) * sim_norm + lam * trust
        ranked.append(
            RankedDocument(
                doc_id=doc_id,
                similarity=similarity,
                sim_norm=sim_norm,
                trust=trust,
                combined=combined,
            )
        )
    ranked.sort(key=lambda r: (-r.combined, r.doc_id))
    return ranked


def ranked_to_records(ranked: list[RankedDocument]) -> list[dict]:
    return [
        {
            "rank": position,
            "doc_id": r.doc_id,
            "similarity": r.similarity,
            "sim_norm": r.sim_norm,
            "trust": r.trust,
            "combined": r.combined,
        }
        for position, r in enumerate(ranked, start=1)
    ]
