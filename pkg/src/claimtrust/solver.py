"""Trust propagation over the signed document graph.

Every document starts at its prior (1.0 for trusted seeds, 0.5 for the rest)
and is repeatedly pulled toward the verdict of its neighborhood: the
weighted mean trust of its supporters minus the weighted mean trust of its
refuters, mapped affinely from [-1, 1] back into [0, 1]. Damping blends that
verdict with the prior:

    s_new = (1 - alpha) * prior + alpha * (support_mean - refute_mean + 1) / 2

Both neighborhood means are L-infinity nonexpansive, so one round moves the
iterate at most alpha times as far as the previous round did. The update is
therefore a contraction with factor alpha < 1 and has exactly one fixed
point, reached from any starting vector; iteration stops once the largest
per-document change drops below the tolerance.
"""

import numpy as np

from .errors import ValidationError
from .graph import DocumentGraph
from .model import TrustConfig, TrustScores


def initial_scores(graph: DocumentGraph, config: TrustConfig) -> np.ndarray:
    prior = np.full(graph.n, config.initial_unknown, dtype=np.float64)
    for position, doc_id in enumerate(graph.doc_ids):
        if doc_id in graph.trusted:
            prior[position] = config.initial_trusted
    return prior


def _neighborhood_mean(matrix, scores: np.ndarray, totals: np.ndarray) -> np.ndarray:
    # Mean trust over weighted neighbors; documents with no such neighbors
    # contribute a mean of zero rather than dividing by zero.
    weighted = matrix @ scores
    safe = np.where(totals > 0.0, totals, 1.0)
    return np.where(totals > 0.0, weighted / safe, 0.0)


def claimrank(
    graph: DocumentGraph,
    config: TrustConfig | None = None,
    start: dict[str, float] | None = None,
    history: list[float] | None = None,
) -> TrustScores:
    """Run the damped fixed-point iteration to convergence.

    start overrides the first iterate only; the prior that anchors each
    update always comes from the seed labels. Seeds are not clamped, so even
    an isolated trusted document drifts off its prior (to 0.575 at the
    defaults). history, when given, collects the per-round L-infinity change.
    """
    if config is None:
        config = TrustConfig()
    if graph.n == 0:
        return TrustScores(scores={}, iterations=0, final_delta=0.0, converged=True)

    prior = initial_scores(graph, config)
    scores = prior.copy()
    if start is not None:
        index = {doc_id: i for i, doc_id in enumerate(graph.doc_ids)}
        for doc_id, value in start.items():
            if doc_id not in index:
                raise ValidationError(f"start score for unknown document {doc_id!r}")
            if not 0.0 <= value <= 1.0:
                raise ValidationError(f"start score for {doc_id} must be in [0, 1], got {value}")
            scores[index[doc_id]] = value

    pos_total, neg_total = graph.degree_totals()
    alpha = config.alpha
    delta = 0.0
    converged = False
    rounds = 0
    for rounds in range(1, config.max_iterations + 1):
        support = _neighborhood_mean(graph.positive, scores, pos_total)
        refute = _neighborhood_mean(graph.negative, scores, neg_total)
        verdict = (support - refute + 1.0) / 2.0
        updated = (1.0 - alpha) * prior + alpha * verdict
        # The exact result lives in [0, 1]; clipping only trims float dust.
        np.clip(updated, 0.0, 1.0, out=updated)
        delta = float(np.max(np.abs(updated - scores)))
        scores = updated
        if history is not None:
            history.append(delta)
        if delta < config.tolerance:
            converged = True
            break

    return TrustScores(
        scores={doc_id: float(scores[i]) for i, doc_id in enumerate(graph.doc_ids)},
        iterations=rounds,
        final_delta=delta,
        converged=converged,
    )


def format_convergence(result: TrustScores) -> str:
    state = "Converged at" if result.converged else "Stopped after"
    return f"{state} round {result.iterations}, quantity of change: {result.final_delta!r}"


def format_scores(result: TrustScores) -> list[str]:
    # The stray space before 's is part of the stable output format that
    # downstream consumers already parse; keep it exactly as is.
    return [
        f"Document {doc_id} 's score: {score:.4f}"
        for doc_id, score in sorted(result.scores.items())
    ]


def format_report(result: TrustScores) -> str:
    return "\n".join([format_convergence(result)] + format_scores(result))
