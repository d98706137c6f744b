"""HTTP service exposing each pipeline stage as a stateless endpoint.

Requests carry all the data a stage needs and responses carry everything it
produced, so the server holds no session state and any client (the bundled
CLI included) owns its files. Domain validation failures map to 422,
upstream provider failures to 502.
"""

from datetime import date

import numpy as np
from fastapi import FastAPI
from fastapi.responses import JSONResponse

from .. import __version__
from ..artifacts import (
    claims_from_records,
    relations_from_records,
    scores_to_records,
)
from ..claims import ClassificationStats, classify_pairs, extract_all
from ..embedindex import EmbeddingIndex, build_index, candidate_pairs, search
from ..errors import ClaimTrustError, ProviderError, ValidationError
from ..evalrun import evaluate, format_table, result_to_records
from ..graph import build_graph, graph_from_records, graph_to_records
from ..ingest import (
    CorpusFilter,
    corpus_from_records,
    corpus_to_records,
    parse_corpus_text,
    parse_raw_corpus_text,
)
from ..model import Seed, TrustConfig, validate_corpus
from ..rerank import ranked_to_records, rerank
from ..solver import claimrank, format_report
from .schemas import (
    ClaimModel,
    ClassifyRequest,
    ClassifyResponse,
    DocumentModel,
    EdgeModel,
    EmbedRequest,
    EmbedResponse,
    EvalRequest,
    EvalResponse,
    ExtractRequest,
    ExtractResponse,
    GraphRequest,
    GraphResponse,
    HealthResponse,
    IngestRequest,
    IngestResponse,
    PairModel,
    PairsRequest,
    PairsResponse,
    QuestionResultModel,
    RankedEntryModel,
    RankRequest,
    RankResponse,
    RelationModel,
    RerankRequest,
    RerankResponse,
    ScoreModel,
    StatsRequest,
    StatsResponse,
)


def _documents(models: list[DocumentModel], counters: dict | None = None):
    return corpus_from_records([m.to_record() for m in models], counters)


def _claims(models: list[ClaimModel]):
    return claims_from_records([m.model_dump() for m in models])


def _relations(models: list[RelationModel]):
    return relations_from_records([m.model_dump() for m in models])


def _iso_date(value: str | None, field: str):
    if value is None:
        return None
    try:
        return date.fromisoformat(value)
    except ValueError as exc:
        raise ValidationError(f"{field} must be an ISO date, got {value!r}") from exc


def _corpus_filter(req: IngestRequest) -> CorpusFilter | None:
    if req.date_from is None and req.date_to is None and req.subject is None:
        return None
    return CorpusFilter(
        date_from=_iso_date(req.date_from, "date_from"),
        date_to=_iso_date(req.date_to, "date_to"),
        subject=req.subject,
    )


def create_app() -> FastAPI:
    app = FastAPI(title="claimtrust", version=__version__)

    @app.exception_handler(ValidationError)
    def on_validation_error(request, exc):
        return JSONResponse(status_code=422, content={"error": str(exc)})

    @app.exception_handler(ProviderError)
    def on_provider_error(request, exc):
        content = {"error": str(exc)}
        if getattr(exc, "status", None) is not None:
            content["upstream_status"] = exc.status
        return JSONResponse(status_code=502, content=content)

    @app.exception_handler(ClaimTrustError)
    def on_other_error(request, exc):
        return JSONResponse(status_code=500, content={"error": str(exc)})

    @app.get("/health", response_model=HealthResponse)
    def health():
        return HealthResponse(status="ok", version=__version__)

    @app.post("/ingest", response_model=IngestResponse)
    def ingest(req: IngestRequest):
        counters: dict = {}
        if req.format == "raw":
            if req.true_content is None or req.fake_content is None:
                raise ValidationError("format 'raw' needs true_content and fake_content")
            documents = parse_raw_corpus_text(
                req.true_content,
                req.fake_content,
                _corpus_filter(req),
                counters,
            )
        elif req.content is not None:
            if req.format == "records":
                raise ValidationError("format 'records' carries documents, not content")
            documents = parse_corpus_text(req.content, req.format, counters)
        elif req.documents is not None:
            documents = _documents(req.documents, counters)
        else:
            raise ValidationError("ingest needs either content or documents")
        return IngestResponse(
            documents=[DocumentModel(**rec) for rec in corpus_to_records(documents)],
            problems=validate_corpus(documents),
            counters=counters,
        )

    @app.post("/extract", response_model=ExtractResponse)
    def extract(req: ExtractRequest):
        if req.max_claims < 1:
            raise ValidationError(f"max_claims must be >= 1, got {req.max_claims}")
        counters: dict = {}
        documents = _documents(req.documents, counters)
        claims = extract_all(documents, req.provider.build(), req.max_claims, counters)
        return ExtractResponse(
            claims=[
                ClaimModel(
                    claim_id=c.claim_id, doc_id=c.doc_id, ordinal=c.ordinal, text=c.text
                )
                for c in claims
            ],
            counters=counters,
        )

    @app.post("/embed", response_model=EmbedResponse)
    def embed(req: EmbedRequest):
        index = build_index(req.ids, req.texts, req.provider.build())
        return EmbedResponse(ids=index.ids, dim=index.dim, vectors=index.matrix.tolist())

    @app.post("/pairs", response_model=PairsResponse)
    def pairs(req: PairsRequest):
        index = EmbeddingIndex(ids=req.ids, matrix=np.asarray(req.vectors, dtype=np.float32))
        found = candidate_pairs(index, req.top_k, doc_of=req.doc_of)
        return PairsResponse(
            pairs=[PairModel(claim_a=a, claim_b=b, similarity=sim) for a, b, sim in found]
        )

    @app.post("/classify", response_model=ClassifyResponse)
    def classify(req: ClassifyRequest):
        claims_by_id = {c.claim_id: c for c in _claims(req.claims)}
        stats = ClassificationStats()
        relations = classify_pairs(
            [(p.claim_a, p.claim_b, p.similarity) for p in req.pairs],
            claims_by_id,
            req.provider.build(),
            stats,
        )
        return ClassifyResponse(
            relations=[
                RelationModel(
                    claim_a=r.claim_a,
                    claim_b=r.claim_b,
                    polarity=r.polarity,
                    similarity=r.similarity,
                )
                for r in relations
            ],
            stats=stats.as_dict(),
        )

    @app.post("/graph", response_model=GraphResponse)
    def graph(req: GraphRequest):
        counters: dict = {}
        documents = _documents(req.documents)
        claims = _claims(req.claims)
        doc_of = {c.claim_id: c.doc_id for c in claims}
        built = build_graph(documents, _relations(req.relations), doc_of, counters)
        return GraphResponse(
            edges=[EdgeModel(**rec) for rec in graph_to_records(built)],
            stats=built.stats(),
            counters=counters,
        )

    @app.post("/rank", response_model=RankResponse)
    def rank(req: RankRequest):
        documents = _documents(req.documents)
        built = graph_from_records([e.to_record() for e in req.edges], documents)
        result = claimrank(built, TrustConfig(**req.trust.model_dump()))
        return RankResponse(
            scores=[ScoreModel(**rec) for rec in scores_to_records(result.scores)],
            iterations=result.iterations,
            final_delta=result.final_delta,
            converged=result.converged,
            report=format_report(result),
        )

    @app.post("/rerank", response_model=RerankResponse)
    def rerank_endpoint(req: RerankRequest):
        counters: dict = {}
        if req.candidates is not None:
            candidates = [(c.doc_id, c.similarity) for c in req.candidates]
        elif req.query is not None:
            if req.ids is None or req.vectors is None:
                raise ValidationError("query retrieval needs ids and vectors")
            index = EmbeddingIndex(ids=req.ids, matrix=np.asarray(req.vectors, dtype=np.float32))
            query_vec = req.provider.build().embed([req.query])[0]
            candidates = search(index, query_vec, min(req.limit, len(index)))
        else:
            raise ValidationError("rerank needs either candidates or a query")
        ranked = rerank(
            candidates,
            {s.doc_id: s.score for s in req.scores},
            mode=req.mode,
            lam=req.lam,
            counters=counters,
        )
        return RerankResponse(
            ranked=[RankedEntryModel(**rec) for rec in ranked_to_records(ranked)],
            counters=counters,
        )

    @app.post("/eval", response_model=EvalResponse)
    def run_eval(req: EvalRequest):
        counters: dict = {}
        documents = _documents(req.documents)
        index = EmbeddingIndex(ids=req.ids, matrix=np.asarray(req.vectors, dtype=np.float32))
        trust_scores = {s.doc_id: s.score for s in req.scores}
        provider = req.provider.build()
        results = [
            evaluate(
                documents,
                index,
                trust_scores,
                [(q.question, q.expected) for q in req.qa],
                provider,
                mode=mode,
                lam=req.lam,
                retrieve_limit=req.retrieve_limit,
                context_size=req.context_size,
                counters=counters,
            )
            for mode in req.modes
        ]
        flattened = [
            QuestionResultModel(**rec)
            for result in results
            for rec in result_to_records(result)
        ]
        return EvalResponse(results=flattened, table=format_table(results), counters=counters)

    @app.post("/stats", response_model=StatsResponse)
    def stats(req: StatsRequest):
        sections: dict = {}
        documents = _documents(req.documents) if req.documents is not None else None
        if documents is not None:
            sections["corpus"] = {
                "documents": len(documents),
                "trusted": sum(1 for d in documents if d.seed == Seed.TRUSTED),
                "with_published": sum(1 for d in documents if d.published is not None),
            }
        if req.claims is not None:
            claims = _claims(req.claims)
            sections["claims"] = {
                "claims": len(claims),
                "documents_with_claims": len({c.doc_id for c in claims}),
            }
        if req.relations is not None:
            relations = _relations(req.relations)
            sections["relations"] = {
                "relations": len(relations),
                "supporting": sum(1 for r in relations if r.polarity == 1),
                "refuting": sum(1 for r in relations if r.polarity == -1),
                "unrelated": sum(1 for r in relations if r.polarity == 0),
            }
        if req.edges is not None:
            if documents is None:
                raise ValidationError("graph stats need the corpus documents as well")
            built = graph_from_records([e.to_record() for e in req.edges], documents)
            sections["graph"] = built.stats()
        if req.scores is not None:
            values = [s.score for s in req.scores]
            sections["scores"] = {
                "documents": len(values),
                "min": min(values) if values else None,
                "max": max(values) if values else None,
                "mean": sum(values) / len(values) if values else None,
            }
        if not sections:
            raise ValidationError("stats needs at least one artifact to summarize")
        return StatsResponse(sections=sections)

    return app
