"""Request and response models for the HTTP service.

The wire shapes mirror the JSONL artifact records one to one, so a client
can stream a file straight into a request body. Unknown fields are rejected;
deep semantic validation stays in the core package.
"""

from typing import Literal

from pydantic import BaseModel, ConfigDict, Field

from ..providers import provider_from_settings


class StrictModel(BaseModel):
    model_config = ConfigDict(extra="forbid", populate_by_name=True)


class ProviderModel(StrictModel):
    kind: Literal["mock", "openai"] = "mock"
    seed: int = 0
    dim: int = 64
    base_url: str | None = None
    api_key: str | None = None
    chat_model: str = "gemma2"
    embed_model: str = "mxbai-embed-large"
    timeout: float = 60.0
    max_retries: int = 2
    temperature: float = 0.0
    max_in_flight: int = 1

    def build(self):
        return provider_from_settings(self.model_dump(exclude_none=True))


class DocumentModel(StrictModel):
    doc_id: str
    title: str = ""
    body: str
    published: str | None = None
    seed: str = "unknown"

    def to_record(self) -> dict:
        return self.model_dump()


class ClaimModel(StrictModel):
    claim_id: str
    doc_id: str
    ordinal: int
    text: str


class PairModel(StrictModel):
    claim_a: str
    claim_b: str
    similarity: float


class RelationModel(StrictModel):
    claim_a: str
    claim_b: str
    polarity: int
    similarity: float


class EdgeModel(StrictModel):
    from_doc: str = Field(alias="from")
    to_doc: str = Field(alias="to")
    weight: float
    sign: str

    def to_record(self) -> dict:
        return {
            "from": self.from_doc,
            "to": self.to_doc,
            "weight": self.weight,
            "sign": self.sign,
        }


class ScoreModel(StrictModel):
    doc_id: str
    score: float


class CandidateModel(StrictModel):
    doc_id: str
    similarity: float


class QAModel(StrictModel):
    question: str
    expected: str


class TrustConfigModel(StrictModel):
    alpha: float = 0.85
    tolerance: float = 1e-6
    max_iterations: int = 1000
    initial_unknown: float = 0.5
    initial_trusted: float = 1.0


class HealthResponse(StrictModel):
    status: str
    version: str


class IngestRequest(StrictModel):
    format: Literal["csv", "jsonl", "records", "raw"] = "records"
    content: str | None = None
    documents: list[DocumentModel] | None = None
    # raw format: two source files plus an optional row filter
    true_content: str | None = None
    fake_content: str | None = None
    date_from: str | None = None
    date_to: str | None = None
    subject: str | None = None


class IngestResponse(StrictModel):
    documents: list[DocumentModel]
    problems: list[str]
    counters: dict[str, int]


class ExtractRequest(StrictModel):
    documents: list[DocumentModel]
    provider: ProviderModel = ProviderModel()
    max_claims: int = 8


class ExtractResponse(StrictModel):
    claims: list[ClaimModel]
    counters: dict[str, int]


class EmbedRequest(StrictModel):
    ids: list[str]
    texts: list[str]
    provider: ProviderModel = ProviderModel()


class EmbedResponse(StrictModel):
    ids: list[str]
    dim: int
    vectors: list[list[float]]


class PairsRequest(StrictModel):
    ids: list[str]
    vectors: list[list[float]]
    top_k: int
    doc_of: dict[str, str] | None = None


class PairsResponse(StrictModel):
    pairs: list[PairModel]


class ClassifyRequest(StrictModel):
    pairs: list[PairModel]
    claims: list[ClaimModel]
    provider: ProviderModel = ProviderModel()


class ClassifyResponse(StrictModel):
    relations: list[RelationModel]
    stats: dict[str, int]


class GraphRequest(StrictModel):
    documents: list[DocumentModel]
    claims: list[ClaimModel]
    relations: list[RelationModel]


class GraphResponse(StrictModel):
    edges: list[EdgeModel]
    stats: dict
    counters: dict[str, int]


class RankRequest(StrictModel):
    documents: list[DocumentModel]
    edges: list[EdgeModel]
    trust: TrustConfigModel = TrustConfigModel()


class RankResponse(StrictModel):
    scores: list[ScoreModel]
    iterations: int
    final_delta: float
    converged: bool
    report: str


class RerankRequest(StrictModel):
    """Either pass ready-made candidates, or pass query + ids + vectors and
    let the service retrieve them from the supplied document index."""

    candidates: list[CandidateModel] | None = None
    query: str | None = None
    ids: list[str] | None = None
    vectors: list[list[float]] | None = None
    provider: ProviderModel = ProviderModel()
    limit: int = 10
    scores: list[ScoreModel]
    mode: Literal["vanilla", "score"] = "score"
    lam: float = Field(0.5, alias="lambda")


class RankedEntryModel(StrictModel):
    rank: int
    doc_id: str
    similarity: float
    sim_norm: float
    trust: float
    combined: float


class RerankResponse(StrictModel):
    ranked: list[RankedEntryModel]
    counters: dict[str, int]


class EvalRequest(StrictModel):
    documents: list[DocumentModel]
    ids: list[str]
    vectors: list[list[float]]
    scores: list[ScoreModel]
    qa: list[QAModel]
    provider: ProviderModel = ProviderModel()
    modes: list[Literal["vanilla", "score"]] = ["vanilla", "score"]
    lam: float = Field(0.5, alias="lambda")
    retrieve_limit: int = 10
    context_size: int = 3


class QuestionResultModel(StrictModel):
    mode: str
    question: str
    expected: str
    answer: str
    context_ids: list[str]
    hit: bool
    judge_score: float


class EvalResponse(StrictModel):
    results: list[QuestionResultModel]
    table: str
    counters: dict[str, int]


class StatsRequest(StrictModel):
    documents: list[DocumentModel] | None = None
    claims: list[ClaimModel] | None = None
    relations: list[RelationModel] | None = None
    edges: list[EdgeModel] | None = None
    scores: list[ScoreModel] | None = None


class StatsResponse(StrictModel):
    sections: dict[str, dict]
