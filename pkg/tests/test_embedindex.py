"""Embedding index: binary format, exact pair mining, search ordering."""

import numpy as np
import pytest

from claimtrust.embedindex import (
    EmbeddingIndex,
    build_index,
    candidate_pairs,
    document_embedding_text,
    search,
)
from claimtrust.errors import DataError, ParseError, ProtocolError, ValidationError
from claimtrust.model import Document
from claimtrust.providers import MockProvider


def brute_force_pairs(index, top_k, doc_of=None):
    """Independent oracle: score every pair, sort, slice."""
    sims = index.matrix @ index.matrix.T
    triples = []
    for i in range(len(index)):
        for j in range(i + 1, len(index)):
            a, b = sorted((index.ids[i], index.ids[j]))
            if doc_of is not None and doc_of.get(a) == doc_of.get(b):
                continue
            sim = min(1.0, max(-1.0, float(sims[i, j])))
            triples.append((a, b, sim))
    triples.sort(key=lambda t: (-t[2], t[0], t[1]))
    return triples[:top_k]


def _unit_rows(rows):
    matrix = np.asarray(rows, dtype=np.float32)
    return matrix / np.linalg.norm(matrix, axis=1, keepdims=True)


def test_index_validation():
    with pytest.raises(DataError):
        EmbeddingIndex(ids=["a"], matrix=np.zeros((2, 3), dtype=np.float32))
    with pytest.raises(DataError):
        EmbeddingIndex(ids=["a", "a"], matrix=np.zeros((2, 3), dtype=np.float32))
    with pytest.raises(DataError):
        EmbeddingIndex(ids=["a"], matrix=np.zeros(3, dtype=np.float32))


def test_save_load_round_trip_is_bit_exact(tmp_path):
    rng = np.random.default_rng(0)
    index = EmbeddingIndex(
        ids=[f"{i:04d}-1" for i in range(7)],
        matrix=rng.standard_normal((7, 5)).astype(np.float32),
    )
    path = tmp_path / "claims.idx"
    index.save(path)
    loaded = EmbeddingIndex.load(path)
    assert loaded.ids == index.ids
    assert loaded.matrix.dtype == np.float32
    assert np.array_equal(loaded.matrix, index.matrix)


def test_load_rejects_corrupt_files(tmp_path):
    path = tmp_path / "x.idx"
    path.write_bytes(b"NOPE" + b"\0" * 12)
    with pytest.raises(ParseError, match="bad magic"):
        EmbeddingIndex.load(path)

    index = EmbeddingIndex(ids=["a", "b"], matrix=np.ones((2, 3), dtype=np.float32))
    good = tmp_path / "good.idx"
    index.save(good)
    blob = good.read_bytes()

    truncated = tmp_path / "trunc.idx"
    truncated.write_bytes(blob[:-4])
    with pytest.raises(ParseError, match="bytes"):
        EmbeddingIndex.load(truncated)

    bad_version = tmp_path / "vers.idx"
    bad_version.write_bytes(blob[:4] + b"\x63\0\0\0" + blob[8:])
    with pytest.raises(ParseError, match="version"):
        EmbeddingIndex.load(bad_version)

    (tmp_path / "good.idx.ids").write_text('{"id": "a"}\n')
    with pytest.raises(ParseError, match="sidecar"):
        EmbeddingIndex.load(good)


def test_build_index_batches_and_dim():
    calls = []

    class Counting(MockProvider):
        def embed(self, texts):
            calls.append(len(texts))
            return super().embed(texts)

    provider = Counting(seed=0, dim=16)
    texts = [f"text {i}" for i in range(130)]
    index = build_index([f"c{i}" for i in range(130)], texts, provider)
    # default batch size is 64
    assert calls == [64, 64, 2]
    assert index.dim == 16
    assert len(index) == 130
    # batching never changes the vectors
    direct = np.stack(MockProvider(seed=0, dim=16).embed(texts)).astype(np.float32)
    assert np.array_equal(index.matrix, direct)


def test_build_index_input_checks():
    with pytest.raises(ValidationError):
        build_index(["a"], [], MockProvider())
    with pytest.raises(ValidationError):
        build_index([], [], MockProvider())


def test_build_index_cross_batch_dim_mismatch():
    class Ragged:
        def __init__(self):
            self.n = 0

        def embed(self, texts):
            self.n += 1
            dim = 4 if self.n == 1 else 5
            return [np.ones(dim) / np.sqrt(dim) for _ in texts]

    with pytest.raises(ProtocolError, match="dimension"):
        build_index(["a", "b"], ["x", "y"], Ragged(), batch_size=1)


def test_document_embedding_text():
    doc = Document(id="0001", title="Title", body="Body.")
    assert document_embedding_text(doc) == "Title\nBody."
    assert document_embedding_text(Document(id="0001", title="", body="Body.")) == "Body."
    long = Document(id="0001", title="", body="x" * 5000)
    assert document_embedding_text(long) == "x" * 2000
    assert document_embedding_text(long, max_chars=10) == "x" * 10


def test_candidate_pairs_known_geometry():
    # c2 duplicates c0's direction; c3 is orthogonal; c1 is in between.
    matrix = _unit_rows(
        [
            [1.0, 0.0],
            [1.0, 1.0],
            [1.0, 0.0],
            [0.0, 1.0],
        ]
    )
    index = EmbeddingIndex(ids=["c0", "c1", "c2", "c3"], matrix=matrix)
    top = candidate_pairs(index, top_k=3)
    assert top[0] == ("c0", "c2", 1.0)
    # 45 degrees between c0 and c1: cosine sqrt(2)/2
    assert top[1][:2] == ("c0", "c1")
    assert abs(top[1][2] - 0.7071) < 1e-4
    assert top == brute_force_pairs(index, 3)


def test_candidate_pairs_tie_break_by_id_pair():
    # three identical vectors: all pair sims exactly 1.0
    matrix = _unit_rows([[1.0, 0.0]] * 3)
    index = EmbeddingIndex(ids=["b", "a", "c"], matrix=matrix)
    top = candidate_pairs(index, top_k=2)
    assert top == [("a", "b", 1.0), ("a", "c", 1.0)]


def test_candidate_pairs_same_document_filter():
    matrix = _unit_rows([[1.0, 0.0]] * 4)
    index = EmbeddingIndex(ids=["0001-1", "0001-2", "0002-1", "0002-2"], matrix=matrix)
    doc_of = {cid: cid.split("-")[0] for cid in index.ids}
    top = candidate_pairs(index, top_k=10, doc_of=doc_of)
    assert len(top) == 4
    assert all(doc_of[a] != doc_of[b] for a, b, _ in top)
    assert top == brute_force_pairs(index, 10, doc_of)


def test_candidate_pairs_top_k_larger_than_pair_count():
    matrix = _unit_rows([[1.0, 0.0], [0.0, 1.0]])
    index = EmbeddingIndex(ids=["a", "b"], matrix=matrix)
    assert candidate_pairs(index, top_k=50) == [("a", "b", 0.0)]
    assert candidate_pairs(index, top_k=0) == []
    with pytest.raises(ValidationError):
        candidate_pairs(index, top_k=-1)


def test_candidate_pairs_blocking_is_invisible_on_exact_vectors():
    # one-hot rows make every dot product exact, so any block size must
    # produce identical floats, not merely the same ids
    rng = np.random.default_rng(4)
    eye = np.eye(8, dtype=np.float32)
    rows = eye[rng.integers(0, 8, size=40)]
    index = EmbeddingIndex(ids=[f"c{i:02d}" for i in range(40)], matrix=rows)
    reference = candidate_pairs(index, top_k=25, block_size=1024)
    for block_size in (1, 3, 7, 40):
        assert candidate_pairs(index, top_k=25, block_size=block_size) == reference
    assert reference == brute_force_pairs(index, 25)


def test_candidate_pairs_matches_oracle_on_random_instances():
    rng = np.random.default_rng(99)
    for trial in range(5):
        n = int(rng.integers(5, 40))
        dim = int(rng.integers(2, 10))
        matrix = rng.standard_normal((n, dim)).astype(np.float32)
        matrix /= np.linalg.norm(matrix, axis=1, keepdims=True)
        index = EmbeddingIndex(ids=[f"c{i:03d}" for i in range(n)], matrix=matrix)
        top_k = int(rng.integers(1, n * (n - 1) // 2 + 2))
        assert candidate_pairs(index, top_k) == brute_force_pairs(index, top_k)


def test_search_orders_and_breaks_ties_by_id():
    matrix = _unit_rows([[1.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    index = EmbeddingIndex(ids=["0002", "0001", "0003"], matrix=matrix)
    hits = search(index, np.array([1.0, 0.0]), limit=3)
    assert [h[0] for h in hits] == ["0001", "0002", "0003"]
    assert hits[0][1] == 1.0
    with pytest.raises(ValidationError):
        search(index, np.array([1.0, 0.0, 0.0]), limit=1)
    with pytest.raises(ValidationError):
        search(index, np.array([1.0, 0.0]), limit=0)
