"""Corpus loading, validation, and deterministic synthetic generation.

Two entry formats exist. Canonical corpora arrive as CSV or JSONL with the
columns/keys doc_id, title, body, published, seed; rows with an empty body
are skipped (and counted) rather than rejected, so one sloppy export row does
not block a whole ingest, while structural problems (bad date, bad seed
label) are hard errors with a line number. Raw corpora arrive as a pair of
CSV files, one of vetted articles and one of unvetted ones, with the columns
title, text, subject, date; these files are known to be noisy, so rows whose
date cannot be read are skipped and counted instead of erroring.
"""

import csv
import io
import json
import random
from dataclasses import dataclass
from datetime import date, datetime, timedelta
from pathlib import Path

from .artifacts import read_jsonl, write_jsonl
from .errors import CapacityError, ParseError, SchemaError, ValidationError
from .model import Document, Seed

CSV_COLUMNS = ("doc_id", "title", "body", "published", "seed")
RAW_COLUMNS = ("title", "text", "subject", "date")

# 4-digit ids allow 0000..9999
MAX_DOCUMENTS = 10000


def _count(counters: dict | None, key: str) -> None:
    if counters is not None:
        counters[key] = counters.get(key, 0) + 1


def _parse_seed(raw, lineno: int) -> Seed:
    label = str(raw or "").strip().lower()
    if label in ("", "unknown"):
        return Seed.UNKNOWN
    if label == "trusted":
        return Seed.TRUSTED
    raise ParseError(f"seed must be 'trusted' or 'unknown', got {raw!r}", line=lineno)


def _parse_published(raw, lineno: int) -> date | None:
    text = str(raw or "").strip()
    if not text:
        return None
    try:
        return date.fromisoformat(text)
    except ValueError as exc:
        raise ParseError(f"published must be an ISO date, got {raw!r}", line=lineno) from exc


def _make_document(rec: dict, lineno: int, counters: dict | None) -> Document | None:
    body = str(rec.get("body") or "")
    if not body.strip():
        _count(counters, "rows_skipped_empty_body")
        return None
    doc_id = str(rec.get("doc_id") or "").strip()
    if not doc_id:
        raise ParseError("doc_id is required", line=lineno)
    return Document(
        id=doc_id,
        title=str(rec.get("title") or ""),
        body=body,
        published=_parse_published(rec.get("published"), lineno),
        seed=_parse_seed(rec.get("seed"), lineno),
    )


def load_corpus_csv(path: str | Path, counters: dict | None = None) -> list[Document]:
    with open(path, encoding="utf-8", newline="") as handle:
        return parse_corpus_text(handle.read(), "csv", counters)


def load_corpus_jsonl(path: str | Path, counters: dict | None = None) -> list[Document]:
    documents = []
    for lineno, rec in enumerate(read_jsonl(path), start=1):
        doc = _make_document(rec, lineno, counters)
        if doc is not None:
            documents.append(doc)
    return documents


def load_corpus(path: str | Path, counters: dict | None = None) -> list[Document]:
    """Dispatch on file extension: .csv, or .jsonl/.ndjson."""
    suffix = Path(path).suffix.lower()
    if suffix == ".csv":
        return load_corpus_csv(path, counters)
    if suffix in (".jsonl", ".ndjson"):
        return load_corpus_jsonl(path, counters)
    raise ValidationError(f"unsupported corpus format {suffix!r} (expected .csv or .jsonl)")


def parse_corpus_text(content: str, format: str, counters: dict | None = None) -> list[Document]:
    """Parse raw corpus content already in memory (the service path)."""
    if format == "csv":
        reader = csv.DictReader(io.StringIO(content))
        header = reader.fieldnames or []
        missing = [col for col in ("doc_id", "body") if col not in header]
        if missing:
            raise ParseError(f"CSV header missing required columns: {', '.join(missing)}")
        documents = []
        # DictReader consumes the header, so data rows start at line 2.
        for lineno, row in enumerate(reader, start=2):
            doc = _make_document(row, lineno, counters)
            if doc is not None:
                documents.append(doc)
        return documents
    if format == "jsonl":
        records = []
        for lineno, line in enumerate(content.splitlines(), start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"bad JSON: {exc.msg}", line=lineno) from exc
            if not isinstance(rec, dict):
                raise ParseError("each line must be a JSON object", line=lineno)
            records.append(rec)
        return corpus_from_records(records, counters)
    raise ValidationError(f"unsupported corpus format {format!r} (expected csv or jsonl)")


def corpus_to_records(documents: list[Document]) -> list[dict]:
    return [
        {
            "doc_id": doc.id,
            "title": doc.title,
            "body": doc.body,
            "published": doc.published.isoformat() if doc.published else None,
            "seed": doc.seed.value,
        }
        for doc in sorted(documents, key=lambda d: d.id)
    ]


def corpus_from_records(records: list[dict], counters: dict | None = None) -> list[Document]:
    documents = []
    for lineno, rec in enumerate(records, start=1):
        doc = _make_document(rec, lineno, counters)
        if doc is not None:
            documents.append(doc)
    return documents


def write_corpus_jsonl(documents: list[Document], path: str | Path) -> None:
    write_jsonl(path, corpus_to_records(documents))


@dataclass(frozen=True)
class CorpusFilter:
    """Optional row filter for raw corpora: publication window and subject tag."""

    date_from: date | None = None
    date_to: date | None = None
    subject: str | None = None

    def __post_init__(self):
        if self.date_from and self.date_to and self.date_from > self.date_to:
            raise ValidationError(
                f"date_from {self.date_from} is after date_to {self.date_to}"
            )

    def admits(self, published: date, subject: str) -> bool:
        if self.date_from is not None and published < self.date_from:
            return False
        if self.date_to is not None and published > self.date_to:
            return False
        if self.subject is not None:
            if subject.strip().casefold() != self.subject.strip().casefold():
                return False
        return True


def parse_raw_date(value) -> date | None:
    """ISO 8601 or the long month form 'May 30, 2017'; None when unreadable."""
    text = str(value or "").strip()
    if not text:
        return None
    try:
        return date.fromisoformat(text)
    except ValueError:
        pass
    try:
        return datetime.strptime(text, "%B %d, %Y").date()
    except ValueError:
        return None


def _raw_rows(content: str, label: str) -> list[dict]:
    reader = csv.DictReader(io.StringIO(content))
    header = reader.fieldnames or []
    missing = [col for col in RAW_COLUMNS if col not in header]
    if missing:
        raise SchemaError(f"{label} header missing required columns: {', '.join(missing)}")
    return list(reader)


def parse_raw_corpus_text(
    true_content: str,
    fake_content: str,
    corpus_filter: CorpusFilter | None = None,
    counters: dict | None = None,
) -> list[Document]:
    """Merge the vetted and unvetted raw files into one corpus.

    Ids are assigned in stable input order, vetted file first, starting at
    0000. Rows with no readable date or no body text are noise: skipped and
    counted, never fatal.
    """
    kept: list[tuple[str, str, date, Seed]] = []
    sources = (
        (true_content, Seed.TRUSTED, "true file"),
        (fake_content, Seed.UNKNOWN, "fake file"),
    )
    for content, seed, label in sources:
        for row in _raw_rows(content, label):
            body = str(row.get("text") or "")
            if not body.strip():
                _count(counters, "rows_skipped_empty_body")
                continue
            published = parse_raw_date(row.get("date"))
            if published is None:
                _count(counters, "rows_skipped_bad_date")
                continue
            if corpus_filter is not None and not corpus_filter.admits(
                published, str(row.get("subject") or "")
            ):
                _count(counters, "rows_filtered_out")
                continue
            kept.append((str(row.get("title") or ""), body, published, seed))
    if len(kept) > MAX_DOCUMENTS:
        raise CapacityError(
            f"corpus holds {len(kept)} documents; 4-digit ids cap out at {MAX_DOCUMENTS}"
        )
    return [
        Document(id=f"{k:04d}", title=title, body=body, published=published, seed=seed)
        for k, (title, body, published, seed) in enumerate(kept)
    ]


def load_raw_corpus(
    true_path: str | Path,
    fake_path: str | Path,
    corpus_filter: CorpusFilter | None = None,
    counters: dict | None = None,
) -> list[Document]:
    return parse_raw_corpus_text(
        Path(true_path).read_text(encoding="utf-8"),
        Path(fake_path).read_text(encoding="utf-8"),
        corpus_filter,
        counters,
    )


# Sentence bank for synthetic corpora. Deliberately declarative one-liners:
# they survive sentence splitting intact, and sampling them across documents
# produces repeated statements that downstream stages can link.
_SENTENCE_BANK = [
    "The Harbor Line carried twelve million riders last year.",
    "The Harbor Line carried nine million riders last year.",
    "Line 4 opened three new stations in the spring.",
    "The ferry terminal reopened after a two-year refit.",
    "Night service now runs on all river crossings.",
    "The depot at Eastfield switched entirely to battery units.",
    "Ticket prices stayed flat for the third year running.",
    "Ticket prices rose by four percent in January.",
    "The signalling upgrade finished two months ahead of schedule.",
    "The signalling upgrade slipped by more than a year.",
    "A new footbridge links the market square to platform two.",
    "Freight traffic through the tunnel doubled over the decade.",
    "The old viaduct is closed for structural repairs.",
    "Weekend ridership recovered to pre-closure levels.",
    "The northern extension cleared its final planning review.",
    "Escalator outages fell sharply after the maintenance overhaul.",
]


def generate_corpus(
    n_docs: int = 6,
    seed: int = 0,
    trusted_fraction: float = 0.25,
    sentences_per_doc: int = 3,
) -> list[Document]:
    """Build a reproducible corpus of short transit bulletins.

    The same (n_docs, seed) always yields byte-identical documents. The first
    max(1, round(n_docs * trusted_fraction)) documents are the trusted seeds.
    """
    if n_docs < 1:
        raise ValidationError(f"n_docs must be >= 1, got {n_docs}")
    if not 0.0 <= trusted_fraction <= 1.0:
        raise ValidationError(f"trusted_fraction must be in [0, 1], got {trusted_fraction}")
    rng = random.Random(seed)
    n_trusted = max(1, round(n_docs * trusted_fraction))
    base_day = date(2031, 1, 6)
    documents = []
    for i in range(n_docs):
        doc_id = f"{i + 1:04d}"
        picks = rng.sample(_SENTENCE_BANK, k=min(sentences_per_doc, len(_SENTENCE_BANK)))
        documents.append(
            Document(
                id=doc_id,
                title=f"Transit bulletin {doc_id}",
                body=" ".join(picks),
                published=base_day + timedelta(days=rng.randrange(360)),
                seed=Seed.TRUSTED if i < n_trusted else Seed.UNKNOWN,
            )
        )
    return documents
