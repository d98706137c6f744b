"""Line-delimited JSON readers and writers for pipeline artifacts.

Every intermediate product (corpus, claims, relations, graph edges, scores)
is a JSONL file: one record per line, UTF-8, sorted deterministically by the
writer. That keeps artifacts diffable and lets every stage be re-run in
isolation.
"""

import json
from pathlib import Path
from typing import Any, Iterable

from .errors import ParseError
from .model import Claim, Relation


def read_jsonl(path: str | Path) -> list[dict]:
    records = []
    with open(path, encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"bad JSON: {exc.msg}", line=lineno) from exc
            if not isinstance(record, dict):
                raise ParseError("each line must be a JSON object", line=lineno)
            records.append(record)
    return records


def write_jsonl(path: str | Path, records: Iterable[dict]) -> None:
    path = Path(path)
    if path.parent != Path("."):
        path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as handle:
        for record in records:
            handle.write(json.dumps(record, ensure_ascii=False, sort_keys=True))
            handle.write("\n")


def claims_to_records(claims: Iterable[Claim]) -> list[dict]:
    return [
        {"claim_id": c.claim_id, "doc_id": c.doc_id, "ordinal": c.ordinal, "text": c.text}
        for c in sorted(claims, key=lambda c: (c.doc_id, c.ordinal))
    ]


def claims_from_records(records: Iterable[dict]) -> list[Claim]:
    claims = []
    for i, rec in enumerate(records, start=1):
        try:
            claims.append(
                Claim(
                    claim_id=rec["claim_id"],
                    doc_id=rec["doc_id"],
                    text=rec["text"],
                    ordinal=int(rec["ordinal"]),
                )
            )
        except KeyError as exc:
            raise ParseError(f"claim record missing field {exc}", line=i) from exc
    return claims


def relations_to_records(relations: Iterable[Relation]) -> list[dict]:
    return [
        {
            "claim_a": r.claim_a,
            "claim_b": r.claim_b,
            "polarity": r.polarity,
            "similarity": r.similarity,
        }
        for r in sorted(relations, key=lambda r: (r.claim_a, r.claim_b))
    ]


def relations_from_records(records: Iterable[dict]) -> list[Relation]:
    relations = []
    for i, rec in enumerate(records, start=1):
        try:
            relations.append(
                Relation(
                    claim_a=rec["claim_a"],
                    claim_b=rec["claim_b"],
                    polarity=int(rec["polarity"]),
                    similarity=float(rec["similarity"]),
                )
            )
        except KeyError as exc:
            raise ParseError(f"relation record missing field {exc}", line=i) from exc
    return relations


def scores_to_records(scores: dict[str, float]) -> list[dict]:
    return [{"doc_id": doc_id, "score": scores[doc_id]} for doc_id in sorted(scores)]


def scores_from_records(records: Iterable[dict]) -> dict[str, float]:
    scores: dict[str, float] = {}
    for i, rec in enumerate(records, start=1):
        try:
            scores[str(rec["doc_id"])] = float(rec["score"])
        except KeyError as exc:
            raise ParseError(f"score record missing field {exc}", line=i) from exc
    return scores


def pairs_to_records(pairs: Iterable[tuple[str, str, float]]) -> list[dict]:
    return [
        {"claim_a": a, "claim_b": b, "similarity": sim}
        for a, b, sim in pairs
    ]


def pairs_from_records(records: Iterable[dict]) -> list[tuple[str, str, float]]:
    pairs = []
    for i, rec in enumerate(records, start=1):
        try:
            pairs.append((rec["claim_a"], rec["claim_b"], float(rec["similarity"])))
        except KeyError as exc:
            raise ParseError(f"pair record missing field {exc}", line=i) from exc
    return pairs


def counters_to_record(counters: dict[str, int]) -> dict[str, Any]:
    return {key: counters[key] for key in sorted(counters)}
