"""End-to-end question answering evaluation over a ranked corpus.

For each (question, expected) pair the runner embeds the question, retrieves
candidate documents, re-ranks them in the requested mode, hands the top few
to the chat provider as context, and grades the reply two ways: a strict
substring check (case- and whitespace-insensitive) and an LLM judge score
parsed from a SCORE: line. Results for the compared modes are rendered as a
fixed-format table.
"""

from dataclasses import dataclass, field

from .claims import (
    ANSWER_SYSTEM,
    JUDGE_SYSTEM,
    parse_score,
    render_answer_prompt,
    render_judge_prompt,
)
from .embedindex import EmbeddingIndex, search
from .errors import DataError, ValidationError
from .model import Document
from .rerank import DEFAULT_LAMBDA, MODES, rerank
from .text import normalize_for_match

RETRIEVE_LIMIT = 10
CONTEXT_SIZE = 3

TABLE_HEADER = "Mode | Substring Accuracy | LLM Avg Score"


@dataclass
class QuestionResult:
    question: str
    expected: str
    answer: str
    context_ids: list[str]
    hit: bool
    judge_score: float


@dataclass
class EvalResult:
    mode: str
    results: list[QuestionResult] = field(default_factory=list)

    @property
    def accuracy(self) -> float:
        if not self.results:
            return 0.0
        return sum(1 for r in self.results if r.hit) / len(self.results)

    @property
    def judge_average(self) -> float:
        if not self.results:
            return 0.0
        return sum(r.judge_score for r in self.results) / len(self.results)


def qa_from_records(records: list[dict]) -> list[tuple[str, str]]:
    pairs = []
    for lineno, rec in enumerate(records, start=1):
        try:
            question = str(rec["question"]).strip()
            expected = str(rec["expected"]).strip()
        except KeyError as exc:
            raise DataError(f"QA record {lineno} missing field {exc}") from exc
        if not question or not expected:
            raise DataError(f"QA record {lineno} has an empty question or expected answer")
        pairs.append((question, expected))
    return pairs


def contains_expected(answer: str, expected: str) -> bool:
    """Substring match after collapsing whitespace and case folding."""
    return normalize_for_match(expected) in normalize_for_match(answer)


def format_context(documents: list[Document], trust_scores: dict[str, float]) -> str:
    lines = []
    for doc in documents:
        trust = trust_scores.get(doc.id, 0.5)
        body = " ".join(doc.body.split())
        lines.append(f"[{doc.id} | trust {trust:.4f}] {body}")
    return "\n".join(lines)


def answer_question(
    question: str,
    context_docs: list[Document],
    trust_scores: dict[str, float],
    provider,
) -> str:
    context = format_context(context_docs, trust_scores)
    return provider.chat(ANSWER_SYSTEM, render_answer_prompt(question, context))


def judge_answer(
    question: str,
    expected: str,
    answer: str,
    provider,
    counters: dict | None = None,
) -> float:
    reply = provider.chat(JUDGE_SYSTEM, render_judge_prompt(question, expected, answer))
    score = parse_score(reply)
    if score is None:
        if counters is not None:
            counters["judge_unparseable"] = counters.get("judge_unparseable", 0) + 1
        return 0.0
    return score


def evaluate(
    documents: list[Document],
    index: EmbeddingIndex,
    trust_scores: dict[str, float],
    qa_pairs: list[tuple[str, str]],
    provider,
    mode: str,
    lam: float = DEFAULT_LAMBDA,
    retrieve_limit: int = RETRIEVE_LIMIT,
    context_size: int = CONTEXT_SIZE,
    counters: dict | None = None,
) -> EvalResult:
    if mode not in MODES:
        raise ValidationError(f"mode must be one of {MODES}, got {mode!r}")
    if not qa_pairs:
        raise ValidationError("evaluation needs at least one question")
    by_id = {doc.id: doc for doc in documents}
    missing = [doc_id for doc_id in index.ids if doc_id not in by_id]
    if missing:
        raise DataError(f"index rows without corpus documents: {missing[:5]}")

    result = EvalResult(mode=mode)
    for question, expected in qa_pairs:
        query_vec = provider.embed([question])[0]
        candidates = search(index, query_vec, min(retrieve_limit, len(index)))
        ranked = rerank(candidates, trust_scores, mode=mode, lam=lam, counters=counters)
        top = ranked[:context_size]
        context_docs = [by_id[r.doc_id] for r in top]
        answer = answer_question(question, context_docs, trust_scores, provider)
        result.results.append(
            QuestionResult(
                question=question,
                expected=expected,
                answer=answer,
                context_ids=[r.doc_id for r in top],
                hit=contains_expected(answer, expected),
                judge_score=judge_answer(question, expected, answer, provider, counters),
            )
        )
    return result


def format_table_row(mode: str, accuracy: float, judge_average: float) -> str:
    return f"{mode} | {accuracy:.3f} | {judge_average:.5f}"


def format_table(results: list[EvalResult]) -> str:
    lines = [TABLE_HEADER]
    for result in results:
        lines.append(format_table_row(result.mode, result.accuracy, result.judge_average))
    return "\n".join(lines)


def result_to_records(result: EvalResult) -> list[dict]:
    return [
        {
            "mode": result.mode,
            "question": r.question,
            "expected": r.expected,
            "answer": r.answer,
            "context_ids": r.context_ids,
            "hit": r.hit,
            "judge_score": r.judge_score,
        }
        for r in result.results
    ]
