"""Embedding index: vector storage, nearest-pair mining, and search.

The on-disk format is a small binary header (magic, version, dim, rows,
little-endian u32s) followed by the row-major float32 matrix, with row ids in
a JSONL sidecar next to it. Rows are unit vectors as delivered by the
provider, cast to float32; cosine similarity is therefore a plain dot
product.

candidate_pairs is exact: it returns precisely the pairs a full similarity
scan would, under the total order (similarity desc, then id pair asc). The
blockwise matmul plus heap-threshold pruning only change how fast the answer
arrives, never what it is.
"""

import heapq
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .artifacts import read_jsonl, write_jsonl
from .errors import DataError, ParseError, ProtocolError, ValidationError
from .model import Document

MAGIC = b"CTEI"
FORMAT_VERSION = 1
HEADER = struct.Struct("<III")


@dataclass
class EmbeddingIndex:
    ids: list[str]
    matrix: np.ndarray

    def __post_init__(self):
        self.matrix = np.ascontiguousarray(self.matrix, dtype=np.float32)
        if self.matrix.ndim != 2:
            raise DataError(f"index matrix must be 2-D, got shape {self.matrix.shape}")
        if len(self.ids) != self.matrix.shape[0]:
            raise DataError(
                f"{len(self.ids)} ids for {self.matrix.shape[0]} matrix rows"
            )
        if len(set(self.ids)) != len(self.ids):
            raise DataError("index ids must be unique")

    def __len__(self) -> int:
        return len(self.ids)

    @property
    def dim(self) -> int:
        return self.matrix.shape[1]

    def save(self, path: str | Path) -> None:
        path = Path(path)
        if path.parent != Path("."):
            path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "wb") as handle:
            handle.write(MAGIC)
            handle.write(HEADER.pack(FORMAT_VERSION, self.dim, len(self.ids)))
            handle.write(self.matrix.tobytes(order="C"))
        write_jsonl(str(path) + ".ids", [{"id": row_id} for row_id in self.ids])

    @classmethod
    def load(cls, path: str | Path) -> "EmbeddingIndex":
        path = Path(path)
        blob = path.read_bytes()
        if blob[:4] != MAGIC:
            raise ParseError(f"{path} is not an embedding index (bad magic)")
        if len(blob) < 4 + HEADER.size:
            raise ParseError(f"{path} is truncated")
        version, dim, rows = HEADER.unpack_from(blob, 4)
        if version != FORMAT_VERSION:
            raise ParseError(f"unsupported index version {version}")
        expected = 4 + HEADER.size + rows * dim * 4
        if len(blob) != expected:
            raise ParseError(f"{path} holds {len(blob)} bytes, expected {expected}")
        matrix = (
            np.frombuffer(blob, dtype="<f4", offset=4 + HEADER.size)
            .reshape(rows, dim)
            .copy()
        )
        ids = [str(rec["id"]) for rec in read_jsonl(str(path) + ".ids")]
        if len(ids) != rows:
            raise ParseError(f"id sidecar lists {len(ids)} rows, index holds {rows}")
        return cls(ids=ids, matrix=matrix)


def build_index(ids: list[str], texts: list[str], provider, batch_size: int = 64) -> EmbeddingIndex:
    if len(ids) != len(texts):
        raise ValidationError(f"{len(ids)} ids for {len(texts)} texts")
    if not ids:
        raise ValidationError("cannot build an index from zero texts")
    vectors: list[np.ndarray] = []
    for start in range(0, len(texts), batch_size):
        vectors.extend(provider.embed(texts[start : start + batch_size]))
    dims = {v.shape[0] for v in vectors}
    if len(dims) > 1:
        raise ProtocolError(f"embedding dimension changed across batches: {sorted(dims)}")
    return EmbeddingIndex(ids=list(ids), matrix=np.stack(vectors).astype(np.float32))


def document_embedding_text(document: Document, max_chars: int = 2000) -> str:
    # Long bodies are cut to a prefix; embedding models see little beyond it
    # anyway and the index stays insensitive to trailing boilerplate.
    text = f"{document.title}\n{document.body}" if document.title else document.body
    return text[:max_chars]


def _clamp(similarity: float) -> float:
    return min(1.0, max(-1.0, similarity))


class _LaterPair:
    """Inverts id-pair comparison so the heap root is the eviction candidate:
    among equal similarities the lexicographically largest pair loses."""

    __slots__ = ("pair",)

    def __init__(self, pair: tuple[str, str]):
        self.pair = pair

    def __lt__(self, other: "_LaterPair") -> bool:
        return self.pair > other.pair


def candidate_pairs(
    index: EmbeddingIndex,
    top_k: int,
    doc_of: dict[str, str] | None = None,
    block_size: int = 1024,
) -> list[tuple[str, str, float]]:
    """The top_k most similar distinct row pairs, in output order
    (similarity desc, then id pair asc).

    doc_of maps row id to its source document; when given, pairs inside one
    document are excluded before selection, since those never become edges.
    """
    if top_k < 0:
        raise ValidationError(f"top_k must be >= 0, got {top_k}")
    if top_k == 0:
        return []
    n = len(index)
    heap: list[tuple[float, _LaterPair]] = []
    for start in range(0, n, block_size):
        stop = min(start + block_size, n)
        sims = index.matrix[start:stop] @ index.matrix.T
        for offset in range(stop - start):
            i = start + offset
            row = sims[offset]
            if len(heap) == top_k and heap[0][0] > -1.0:
                # Worst kept similarity prunes the row; ties must survive
                # because the pair-id tiebreak can still beat the root. The
                # raw row is unclamped, so a threshold of -1 filters nothing.
                candidates = np.nonzero(row[i + 1 :] >= heap[0][0])[0] + i + 1
            else:
                candidates = range(i + 1, n)
            for j in candidates:
                id_i, id_j = index.ids[i], index.ids[int(j)]
                if doc_of is not None and doc_of.get(id_i) == doc_of.get(id_j):
                    continue
                pair = (id_i, id_j) if id_i < id_j else (id_j, id_i)
                # float32 dots of unit rows can overshoot +/-1 by an ulp;
                # clamp before ranking so ties and outputs agree on [-1, 1].
                entry = (_clamp(float(row[int(j)])), _LaterPair(pair))
                if len(heap) < top_k:
                    heapq.heappush(heap, entry)
                elif entry > heap[0]:
                    heapq.heapreplace(heap, entry)
    kept = [(sim, later.pair) for sim, later in heap]
    kept.sort(key=lambda item: (-item[0], item[1]))
    return [(pair[0], pair[1], sim) for sim, pair in kept]


def search(index: EmbeddingIndex, query_vector: np.ndarray, limit: int) -> list[tuple[str, float]]:
    """Rows most similar to the query, ordered by (similarity desc, id asc)."""
    if limit < 1:
        raise ValidationError(f"limit must be >= 1, got {limit}")
    query = np.asarray(query_vector, dtype=np.float32)
    if query.shape != (index.dim,):
        raise ValidationError(f"query has shape {query.shape}, index dim is {index.dim}")
    sims = index.matrix @ query
    ranked = sorted(
        ((index.ids[i], _clamp(float(sims[i]))) for i in range(len(index))),
        key=lambda item: (-item[1], item[0]),
    )
    return ranked[:limit]
