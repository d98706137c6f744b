"""Claim extraction and pairwise relation classification.

Both stages talk to a chat provider through packaged prompt templates and
parse the replies leniently: a model that wraps its answer in prose still
gets through, and a reply with no parseable payload increments a counter
instead of aborting the batch.
"""

import re
from dataclasses import dataclass, field
from importlib import resources

from .errors import DataError, ProviderError
from .model import Claim, Document, Relation, make_claim_id
from .providers import bounded_map
from .text import normalize_for_match, normalize_whitespace

MAX_CLAIMS_PER_DOC = 8

EXTRACTION_SYSTEM = "You extract factual claims from documents, without adding any of your own."
CLASSIFICATION_SYSTEM = "You judge logical relations between pairs of short factual claims."
ANSWER_SYSTEM = "You answer questions from the supplied context documents only."
JUDGE_SYSTEM = "You grade answers for factual agreement with an expected answer."

_NUMBERED_LINE = re.compile(r"^\s*\d+[.)]\s+(?P<text>\S.*?)\s*$")
_VERDICT = re.compile(r"ANSWER:\s*(?P<value>-?\d+)")
_SCORE = re.compile(r"SCORE:\s*(?P<value>-?\d+(?:\.\d+)?)")


def load_template(name: str) -> str:
    return (resources.files("claimtrust") / "templates" / name).read_text(encoding="utf-8")


def render_extraction_prompt(document: Document, max_claims: int = MAX_CLAIMS_PER_DOC) -> str:
    return load_template("claim_extraction.txt").format(
        max_claims=max_claims, body=document.body
    )


def render_classification_prompt(text_a: str, text_b: str) -> str:
    return load_template("relation_classification.txt").format(claim_a=text_a, claim_b=text_b)


def render_answer_prompt(question: str, context: str) -> str:
    return load_template("answer_generation.txt").format(context=context, question=question)


def render_judge_prompt(question: str, expected: str, answer: str) -> str:
    return load_template("judge.txt").format(question=question, expected=expected, answer=answer)


def parse_numbered_list(reply: str) -> list[str]:
    """Pull the items out of a numbered-list reply, ignoring surrounding prose."""
    items = []
    for line in reply.splitlines():
        match = _NUMBERED_LINE.match(line)
        if match:
            items.append(normalize_whitespace(match.group("text")))
    return [item for item in items if item]


def parse_verdict(reply: str) -> int | None:
    """Last ANSWER: line wins; anything outside {-1, 0, 1} is a parse failure."""
    matches = _VERDICT.findall(reply)
    if not matches:
        return None
    value = int(matches[-1])
    return value if value in (-1, 0, 1) else None


def parse_score(reply: str) -> float | None:
    """Last SCORE: line wins; out-of-range values are clamped into [0, 1]."""
    matches = _SCORE.findall(reply)
    if not matches:
        return None
    return min(1.0, max(0.0, float(matches[-1])))


def _bump(counters: dict | None, key: str, amount: int = 1) -> None:
    if counters is not None:
        counters[key] = counters.get(key, 0) + amount


def extract_claims(
    document: Document,
    provider,
    max_claims: int = MAX_CLAIMS_PER_DOC,
    counters: dict | None = None,
) -> list[Claim]:
    """One extraction call for one document, deduplicated and capped.

    Duplicate statements (after whitespace/case folding) keep their first
    occurrence. A reply with no numbered lines yields zero claims and bumps
    the extraction_empty counter.
    """
    document.validate()
    reply = provider.chat(EXTRACTION_SYSTEM, render_extraction_prompt(document, max_claims))
    texts = parse_numbered_list(reply)
    if not texts:
        _bump(counters, "extraction_empty")
        return []
    seen: set[str] = set()
    claims = []
    for text in texts:
        key = normalize_for_match(text)
        if key in seen:
            _bump(counters, "claims_deduplicated")
            continue
        seen.add(key)
        if len(claims) >= max_claims:
            _bump(counters, "claims_truncated")
            break
        # 0-based list position doubles as the claim id suffix
        ordinal = len(claims)
        claims.append(
            Claim(
                claim_id=make_claim_id(document.id, ordinal),
                doc_id=document.id,
                text=text,
                ordinal=ordinal,
            )
        )
    return claims


def extract_all(
    documents: list[Document],
    provider,
    max_claims: int = MAX_CLAIMS_PER_DOC,
    counters: dict | None = None,
) -> list[Claim]:
    """Extract from every document; per-document provider failures skip that
    document (counted) instead of aborting the run."""

    def one(document: Document) -> list[Claim]:
        try:
            return extract_claims(document, provider, max_claims, counters)
        except ProviderError:
            _bump(counters, "extraction_provider_errors")
            return []

    max_in_flight = getattr(provider, "max_in_flight", 1)
    batches = bounded_map(one, documents, max_in_flight)
    return [claim for batch in batches for claim in batch]


@dataclass
class ClassificationStats:
    """Tally of one classification run, persisted next to the relations."""

    pairs_total: int = 0
    classified: int = 0
    supporting: int = 0
    refuting: int = 0
    unrelated: int = 0
    parse_failures: int = 0
    provider_errors: int = 0
    extra: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        record = {
            "pairs_total": self.pairs_total,
            "classified": self.classified,
            "supporting": self.supporting,
            "refuting": self.refuting,
            "unrelated": self.unrelated,
            "parse_failures": self.parse_failures,
            "provider_errors": self.provider_errors,
        }
        record.update(self.extra)
        return record


def classify_pair(text_a: str, text_b: str, provider) -> int | None:
    reply = provider.chat(CLASSIFICATION_SYSTEM, render_classification_prompt(text_a, text_b))
    return parse_verdict(reply)


def classify_pairs(
    pairs: list[tuple[str, str, float]],
    claims_by_id: dict[str, Claim],
    provider,
    stats: ClassificationStats | None = None,
) -> list[Relation]:
    """Classify candidate (claim_a, claim_b, similarity) triples.

    Only supporting and refuting verdicts become Relations; unrelated pairs
    are tallied in the stats and dropped, so every returned Relation carries a
    nonzero polarity. Pairs whose claim ids are unknown are a hard error (the
    artifacts are out of sync), while provider failures and unparseable
    replies skip just that pair.
    """
    if stats is None:
        stats = ClassificationStats()
    stats.pairs_total += len(pairs)
    for a, b, _ in pairs:
        if a not in claims_by_id or b not in claims_by_id:
            missing = a if a not in claims_by_id else b
            raise DataError(f"candidate pair references unknown claim {missing!r}")

    def one(pair: tuple[str, str, float]) -> Relation | str:
        a, b, similarity = pair
        try:
            verdict = classify_pair(claims_by_id[a].text, claims_by_id[b].text, provider)
        except ProviderError:
            return "provider_error"
        if verdict is None:
            return "parse_failure"
        return Relation(claim_a=a, claim_b=b, polarity=verdict, similarity=similarity)

    max_in_flight = getattr(provider, "max_in_flight", 1)
    relations = []
    for outcome in bounded_map(one, pairs, max_in_flight):
        if outcome == "provider_error":
            stats.provider_errors += 1
        elif outcome == "parse_failure":
            stats.parse_failures += 1
        else:
            stats.classified += 1
            if outcome.polarity == 1:
                stats.supporting += 1
            elif outcome.polarity == -1:
                stats.refuting += 1
            else:
                stats.unrelated += 1
                continue
            relations.append(outcome)
    return relations
