"""Shared fixtures: scripted providers and direct graph construction."""

import sys

import numpy as np
import pytest

from claimtrust.graph import DocumentGraph, build_graph
from claimtrust.model import Document, Relation, Seed
from claimtrust.providers import MockProvider


class ScriptedChatProvider:
    """Replays canned chat replies in order; embedding delegates to the
    deterministic mock so retrieval still works."""

    def __init__(self, replies, seed=0, dim=32):
        self.replies = list(replies)
        self.calls = []
        self.max_in_flight = 1
        self._mock = MockProvider(seed=seed, dim=dim)

    def chat(self, system_prompt: str, user_prompt: str) -> str:
        self.calls.append((system_prompt, user_prompt))
        if not self.replies:
            raise AssertionError("scripted provider ran out of replies")
        return self.replies.pop(0)

    def embed(self, texts):
        return self._mock.embed(texts)


def make_documents(seeds: list[Seed]) -> list[Document]:
    return [
        Document(id=f"{i + 1:04d}", title=f"Doc {i + 1:04d}", body="One statement.", seed=seed)
        for i, seed in enumerate(seeds)
    ]


def make_graph(seeds: list[Seed], edges: list[tuple[int, int, int]]) -> DocumentGraph:
    """Graph over len(seeds) documents; edges are (i, j, polarity) document
    index triples, one unit of weight each (repeats accumulate)."""
    documents = make_documents(seeds)
    relations = []
    doc_of = {}
    for k, (i, j, polarity) in enumerate(edges):
        claim_a = f"{documents[i].id}-c{k}a"
        claim_b = f"{documents[j].id}-c{k}b"
        doc_of[claim_a] = documents[i].id
        doc_of[claim_b] = documents[j].id
        relations.append(
            Relation(claim_a=claim_a, claim_b=claim_b, polarity=polarity, similarity=0.9)
        )
    return build_graph(documents, relations, doc_of)


def random_graph(rng: np.random.Generator, max_docs: int = 50) -> DocumentGraph:
    n = int(rng.integers(2, max_docs + 1))
    seeds = [Seed.TRUSTED if rng.random() < 0.3 else Seed.UNKNOWN for _ in range(n)]
    edges = []
    for _ in range(int(rng.integers(0, 3 * n))):
        i = int(rng.integers(0, n))
        j = int(rng.integers(0, n))
        if i == j:
            continue
        polarity = 1 if rng.random() < 0.6 else -1
        edges.append((i, j, polarity))
    return make_graph(seeds, edges)


@pytest.fixture
def mock_provider() -> MockProvider:
    return MockProvider(seed=7, dim=32)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    # Surface the acceptance one-liners even though pytest captures stdout.
    module = sys.modules.get("test_acceptance")
    lines = getattr(module, "RESULTS", None) if module else None
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
