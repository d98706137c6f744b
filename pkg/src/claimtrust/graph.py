"""Signed document graph built from claim-level relations.

A supporting relation between claims in two different documents adds weight
1.0 to the supporting edge between those documents, in both directions; a
refuting relation does the same on the refuting side. Relations inside one
document and unrelated verdicts contribute nothing. Both signs live in their
own symmetric sparse matrix, indexed by document position in the corpus
order, so the same corpus always produces the same arrays.
"""

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import DataError
from .model import Document, Relation, Seed

SIGN_POSITIVE = "+"
SIGN_NEGATIVE = "-"


@dataclass
class DocumentGraph:
    doc_ids: list[str]
    trusted: frozenset
    positive: sp.csr_matrix
    negative: sp.csr_matrix

    @property
    def n(self) -> int:
        return len(self.doc_ids)

    def index_of(self, doc_id: str) -> int:
        try:
            return self.doc_ids.index(doc_id)
        except ValueError:
            raise DataError(f"document {doc_id!r} is not in the graph") from None

    def degree_totals(self) -> tuple[np.ndarray, np.ndarray]:
        """Per-document total supporting and refuting weight (exact: weights
        are whole numbers, so float addition never rounds)."""
        pos = np.asarray(self.positive.sum(axis=1)).ravel()
        neg = np.asarray(self.negative.sum(axis=1)).ravel()
        return pos, neg

    def stats(self) -> dict:
        pos_total, neg_total = self.degree_totals()
        isolated = int(np.sum((pos_total == 0) & (neg_total == 0)))
        return {
            "documents": self.n,
            "trusted": len(self.trusted),
            "supporting_edges": int(self.positive.nnz // 2),
            "refuting_edges": int(self.negative.nnz // 2),
            "supporting_weight": float(pos_total.sum() / 2),
            "refuting_weight": float(neg_total.sum() / 2),
            "isolated_documents": isolated,
        }


def _symmetric_matrix(n: int, entries: dict[tuple[int, int], float]) -> sp.csr_matrix:
    if not entries:
        return sp.csr_matrix((n, n))
    rows, cols, weights = [], [], []
    for (i, j), weight in entries.items():
        rows.extend((i, j))
        cols.extend((j, i))
        weights.extend((weight, weight))
    matrix = sp.coo_matrix((weights, (rows, cols)), shape=(n, n)).tocsr()
    matrix.sum_duplicates()
    return matrix


def build_graph(
    documents: list[Document],
    relations: list[Relation],
    doc_of: dict[str, str],
    counters: dict | None = None,
) -> DocumentGraph:
    """Aggregate claim relations into the two signed matrices.

    doc_of maps claim id to its source document id. A relation naming a claim
    or document the artifacts do not know is a hard error; those files were
    produced by different runs.
    """

    def bump(key: str) -> None:
        if counters is not None:
            counters[key] = counters.get(key, 0) + 1

    index: dict[str, int] = {}
    for position, doc in enumerate(documents):
        if doc.id in index:
            raise DataError(f"duplicate document id {doc.id!r}")
        index[doc.id] = position

    pos_entries: dict[tuple[int, int], float] = {}
    neg_entries: dict[tuple[int, int], float] = {}
    for rel in relations:
        if rel.polarity == 0:
            bump("relations_unrelated")
            continue
        for claim_id in (rel.claim_a, rel.claim_b):
            if claim_id not in doc_of:
                raise DataError(f"relation references unknown claim {claim_id!r}")
        doc_a, doc_b = doc_of[rel.claim_a], doc_of[rel.claim_b]
        for doc_id in (doc_a, doc_b):
            if doc_id not in index:
                raise DataError(f"claim maps to unknown document {doc_id!r}")
        if doc_a == doc_b:
            bump("relations_same_document")
            continue
        i, j = index[doc_a], index[doc_b]
        key = (i, j) if i < j else (j, i)
        target = pos_entries if rel.polarity == 1 else neg_entries
        target[key] = target.get(key, 0.0) + 1.0
        bump("edges_supporting" if rel.polarity == 1 else "edges_refuting")

    n = len(documents)
    return DocumentGraph(
        doc_ids=[doc.id for doc in documents],
        trusted=frozenset(doc.id for doc in documents if doc.seed == Seed.TRUSTED),
        positive=_symmetric_matrix(n, pos_entries),
        negative=_symmetric_matrix(n, neg_entries),
    )


def graph_to_records(graph: DocumentGraph) -> list[dict]:
    """One record per undirected edge (from < to), sorted for stable files."""
    records = []
    for sign, matrix in ((SIGN_POSITIVE, graph.positive), (SIGN_NEGATIVE, graph.negative)):
        coo = matrix.tocoo()
        for i, j, weight in zip(coo.row, coo.col, coo.data):
            if i < j:
                records.append(
                    {
                        "from": graph.doc_ids[int(i)],
                        "to": graph.doc_ids[int(j)],
                        "weight": float(weight),
                        "sign": sign,
                    }
                )
    records.sort(key=lambda r: (r["from"], r["to"], r["sign"]))
    return records


def graph_from_records(records: list[dict], documents: list[Document]) -> DocumentGraph:
    """Rebuild a graph from its edge records plus the corpus that defines
    document order and seed labels."""
    index: dict[str, int] = {}
    for position, doc in enumerate(documents):
        if doc.id in index:
            raise DataError(f"duplicate document id {doc.id!r}")
        index[doc.id] = position

    pos_entries: dict[tuple[int, int], float] = {}
    neg_entries: dict[tuple[int, int], float] = {}
    for lineno, rec in enumerate(records, start=1):
        try:
            src, dst = str(rec["from"]), str(rec["to"])
            weight = float(rec["weight"])
            sign = rec["sign"]
        except KeyError as exc:
            raise DataError(f"edge record {lineno} missing field {exc}") from exc
        if sign not in (SIGN_POSITIVE, SIGN_NEGATIVE):
            raise DataError(f"edge record {lineno} has sign {sign!r}")
        if weight <= 0:
            raise DataError(f"edge record {lineno} has non-positive weight {weight}")
        for doc_id in (src, dst):
            if doc_id not in index:
                raise DataError(f"edge record {lineno} names unknown document {doc_id!r}")
        if src == dst:
            raise DataError(f"edge record {lineno} is a self-edge on {src!r}")
        i, j = index[src], index[dst]
        key = (i, j) if i < j else (j, i)
        target = pos_entries if sign == SIGN_POSITIVE else neg_entries
        target[key] = target.get(key, 0.0) + weight

    n = len(documents)
    return DocumentGraph(
        doc_ids=[doc.id for doc in documents],
        trusted=frozenset(doc.id for doc in documents if doc.seed == Seed.TRUSTED),
        positive=_symmetric_matrix(n, pos_entries),
        negative=_symmetric_matrix(n, neg_entries),
    )
