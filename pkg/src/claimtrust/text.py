"""Small text helpers used across ingestion, mocking and evaluation."""

import re

_WHITESPACE = re.compile(r"\s+")
_SENTENCE_END = re.compile(r"(?<=[.!?])\s+")


def normalize_whitespace(text: str) -> str:
    """Collapse whitespace runs to single spaces and strip the ends.

    Case and punctuation are preserved; named entities must stay readable.
    """
    return _WHITESPACE.sub(" ", text).strip()


def normalize_for_match(text: str) -> str:
    """Normalization used for substring matching: whitespace-collapsed, casefolded."""
    return normalize_whitespace(text).casefold()


def split_sentences(text: str) -> list[str]:
    """Naive sentence split on terminal punctuation. Good enough for fixtures."""
    parts = _SENTENCE_END.split(normalize_whitespace(text))
    return [p.strip() for p in parts if p.strip()]
