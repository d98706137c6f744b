"""Command-line client for the pipeline service.

Every subcommand reads local artifact files, calls one service endpoint, and
writes the response back to local files. By default the service runs
in-process (no daemon needed); --server points the same commands at a remote
instance. Exit codes: 0 success, 1 invalid input or data, 2 provider or
transport failure, 64 usage error.
"""

import argparse
import asyncio
import json
import sys
from pathlib import Path

import httpx
import numpy as np

from .artifacts import read_jsonl, write_jsonl
from .config import resolve, section
from .embedindex import EmbeddingIndex, document_embedding_text
from .errors import (
    ClaimTrustError,
    ProtocolError,
    ProviderError,
    ValidationError,
)
from .ingest import corpus_from_records, corpus_to_records, generate_corpus
from .service import create_app

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_PROVIDER = 2
EXIT_USAGE = 64

REMOTE_TIMEOUT = 600.0


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on bad usage; this client reserves 2 for provider
    failures, so usage errors move to 64."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


class ServiceClient:
    def __init__(self, server: str | None = None):
        self.server = server.rstrip("/") if server else None
        self._app = None

    def post(self, path: str, payload: dict) -> dict:
        if self.server is None:
            response = self._post_local(path, payload)
        else:
            response = self._post_remote(path, payload)
        if 200 <= response.status_code < 300:
            return response.json()
        message = _error_message(response)
        if 400 <= response.status_code < 500:
            raise ValidationError(message)
        raise ProviderError(message, status=response.status_code)

    def _post_local(self, path: str, payload: dict) -> httpx.Response:
        if self._app is None:
            self._app = create_app()

        async def go():
            transport = httpx.ASGITransport(app=self._app)
            async with httpx.AsyncClient(
                transport=transport, base_url="http://service"
            ) as client:
                return await client.post(path, json=payload, timeout=None)

        return asyncio.run(go())

    def _post_remote(self, path: str, payload: dict) -> httpx.Response:
        try:
            return httpx.post(self.server + path, json=payload, timeout=REMOTE_TIMEOUT)
        except httpx.HTTPError as exc:
            raise ProtocolError(f"cannot reach {self.server}: {exc}") from exc


def _error_message(response: httpx.Response) -> str:
    try:
        body = response.json()
    except ValueError:
        return response.text[:500]
    if isinstance(body, dict):
        if "error" in body:
            return str(body["error"])
        if "detail" in body:
            return json.dumps(body["detail"])
    return json.dumps(body)[:500]


def _collect_overrides(pairs: list[str]) -> dict:
    overrides = {}
    for item in pairs:
        key, sep, value = item.partition("=")
        if not sep:
            raise ValidationError(f"--set expects key=value, got {item!r}")
        overrides[key.strip()] = value.strip()
    return overrides


def _settings(args) -> dict:
    return resolve(path=args.config, overrides=_collect_overrides(args.set or []))


def _provider_payload(settings: dict) -> dict:
    return section(settings, "provider")


def _print_counters(counters: dict) -> None:
    for key in sorted(counters):
        if counters[key]:
            print(f"  {key}: {counters[key]}")


def _load_index_payload(path: str) -> tuple[list[str], list[list[float]]]:
    index = EmbeddingIndex.load(path)
    return index.ids, index.matrix.tolist()


def cmd_ingest(args, client: ServiceClient, settings: dict) -> int:
    if args.synthetic is not None:
        documents = generate_corpus(
            n_docs=args.synthetic,
            seed=args.seed,
            trusted_fraction=args.trusted_fraction,
        )
        payload = {"format": "records", "documents": corpus_to_records(documents)}
    elif args.true_csv:
        payload = {
            "format": "raw",
            "true_content": Path(args.true_csv).read_text(encoding="utf-8"),
            "fake_content": Path(args.fake_csv).read_text(encoding="utf-8"),
            "date_from": args.date_from,
            "date_to": args.date_to,
            "subject": args.subject,
        }
    else:
        suffix = Path(args.input).suffix.lower()
        fmt = {".csv": "csv", ".jsonl": "jsonl", ".ndjson": "jsonl"}.get(suffix)
        if fmt is None:
            raise ValidationError(f"unsupported corpus format {suffix!r} (expected .csv or .jsonl)")
        payload = {"format": fmt, "content": Path(args.input).read_text(encoding="utf-8")}
    reply = client.post("/ingest", payload)
    if reply["problems"]:
        for problem in reply["problems"]:
            print(f"problem: {problem}", file=sys.stderr)
        raise ValidationError(f"corpus has {len(reply['problems'])} problems; nothing written")
    write_jsonl(args.out, reply["documents"])
    trusted = sum(1 for d in reply["documents"] if d["seed"] == "trusted")
    print(f"Ingested {len(reply['documents'])} documents ({trusted} trusted) -> {args.out}")
    _print_counters(reply["counters"])
    return EXIT_OK


def cmd_extract(args, client: ServiceClient, settings: dict) -> int:
    documents = read_jsonl(args.corpus)
    reply = client.post(
        "/extract",
        {
            "documents": documents,
            "provider": _provider_payload(settings),
            "max_claims": args.max_claims,
        },
    )
    write_jsonl(args.out, reply["claims"])
    docs_with = len({c["doc_id"] for c in reply["claims"]})
    print(f"Extracted {len(reply['claims'])} claims from {docs_with} documents -> {args.out}")
    _print_counters(reply["counters"])
    return EXIT_OK


def cmd_embed(args, client: ServiceClient, settings: dict) -> int:
    if args.kind == "claims":
        records = read_jsonl(args.claims)
        ids = [rec["claim_id"] for rec in records]
        texts = [rec["text"] for rec in records]
    else:
        documents = corpus_from_records(read_jsonl(args.corpus))
        ids = [doc.id for doc in documents]
        texts = [document_embedding_text(doc) for doc in documents]
    reply = client.post(
        "/embed", {"ids": ids, "texts": texts, "provider": _provider_payload(settings)}
    )
    index = EmbeddingIndex(
        ids=reply["ids"], matrix=np.asarray(reply["vectors"], dtype=np.float32)
    )
    index.save(args.out)
    print(f"Embedded {len(index)} {args.kind} (dim {index.dim}) -> {args.out}")
    return EXIT_OK


def cmd_pairs(args, client: ServiceClient, settings: dict) -> int:
    ids, vectors = _load_index_payload(args.index)
    doc_of = None
    if args.claims:
        doc_of = {rec["claim_id"]: rec["doc_id"] for rec in read_jsonl(args.claims)}
    top_k = args.top_k if args.top_k is not None else settings["pairs.top_k"]
    reply = client.post(
        "/pairs", {"ids": ids, "vectors": vectors, "top_k": top_k, "doc_of": doc_of}
    )
    write_jsonl(args.out, reply["pairs"])
    print(f"Selected {len(reply['pairs'])} candidate pairs (top_k {top_k}) -> {args.out}")
    return EXIT_OK


def cmd_classify(args, client: ServiceClient, settings: dict) -> int:
    reply = client.post(
        "/classify",
        {
            "pairs": read_jsonl(args.pairs),
            "claims": read_jsonl(args.claims),
            "provider": _provider_payload(settings),
        },
    )
    write_jsonl(args.out, reply["relations"])
    stats = reply["stats"]
    stats_path = args.stats_out or (args.out + ".stats.json")
    Path(stats_path).write_text(json.dumps(stats, indent=2, sort_keys=True) + "\n")
    print(
        f"Classified {stats['classified']}/{stats['pairs_total']} pairs: "
        f"{stats['supporting']} supporting, {stats['refuting']} refuting, "
        f"{stats['unrelated']} unrelated -> {args.out}"
    )
    if stats["parse_failures"] or stats["provider_errors"]:
        print(
            f"  parse_failures: {stats['parse_failures']}, "
            f"provider_errors: {stats['provider_errors']}"
        )
    return EXIT_OK


def cmd_graph(args, client: ServiceClient, settings: dict) -> int:
    reply = client.post(
        "/graph",
        {
            "documents": read_jsonl(args.corpus),
            "claims": read_jsonl(args.claims),
            "relations": read_jsonl(args.relations),
        },
    )
    write_jsonl(args.out, reply["edges"])
    stats = reply["stats"]
    print(
        f"Graph over {stats['documents']} documents: "
        f"{stats['supporting_edges']} supporting edges, "
        f"{stats['refuting_edges']} refuting edges, "
        f"{stats['isolated_documents']} isolated -> {args.out}"
    )
    _print_counters(reply["counters"])
    return EXIT_OK


def cmd_rank(args, client: ServiceClient, settings: dict) -> int:
    reply = client.post(
        "/rank",
        {
            "documents": read_jsonl(args.corpus),
            "edges": read_jsonl(args.graph),
            "trust": section(settings, "trust"),
        },
    )
    write_jsonl(args.out, reply["scores"])
    print(reply["report"])
    return EXIT_OK


def cmd_rerank(args, client: ServiceClient, settings: dict) -> int:
    lam = args.lam if args.lam is not None else settings["rerank.lambda"]
    payload = {
        "scores": read_jsonl(args.scores),
        "mode": args.mode,
        "lambda": lam,
    }
    if args.candidates:
        payload["candidates"] = read_jsonl(args.candidates)
    else:
        ids, vectors = _load_index_payload(args.index)
        payload.update(
            {
                "query": args.query,
                "ids": ids,
                "vectors": vectors,
                "provider": _provider_payload(settings),
                "limit": args.limit if args.limit is not None else settings["eval.retrieve_limit"],
            }
        )
    reply = client.post("/rerank", payload)
    if args.out:
        write_jsonl(args.out, reply["ranked"])
        print(f"Reranked {len(reply['ranked'])} documents ({args.mode}) -> {args.out}")
    else:
        for entry in reply["ranked"]:
            print(
                f"{entry['rank']}. {entry['doc_id']}  "
                f"combined {entry['combined']:.4f}  "
                f"sim_norm {entry['sim_norm']:.4f}  "
                f"trust {entry['trust']:.4f}"
            )
    _print_counters(reply["counters"])
    return EXIT_OK


def cmd_eval(args, client: ServiceClient, settings: dict) -> int:
    ids, vectors = _load_index_payload(args.index)
    lam = args.lam if args.lam is not None else settings["rerank.lambda"]
    reply = client.post(
        "/eval",
        {
            "documents": read_jsonl(args.corpus),
            "ids": ids,
            "vectors": vectors,
            "scores": read_jsonl(args.scores),
            "qa": read_jsonl(args.qa),
            "provider": _provider_payload(settings),
            "modes": args.modes.split(","),
            "lambda": lam,
            "retrieve_limit": settings["eval.retrieve_limit"],
            "context_size": settings["eval.context_size"],
        },
    )
    if args.out:
        write_jsonl(args.out, reply["results"])
    print(reply["table"])
    _print_counters(reply["counters"])
    return EXIT_OK


def cmd_stats(args, client: ServiceClient, settings: dict) -> int:
    payload = {}
    if args.corpus:
        payload["documents"] = read_jsonl(args.corpus)
    if args.claims:
        payload["claims"] = read_jsonl(args.claims)
    if args.relations:
        payload["relations"] = read_jsonl(args.relations)
    if args.graph:
        payload["edges"] = read_jsonl(args.graph)
    if args.scores:
        payload["scores"] = read_jsonl(args.scores)
    if not payload:
        raise ValidationError("stats needs at least one artifact file")
    reply = client.post("/stats", payload)
    for name, values in reply["sections"].items():
        parts = " ".join(f"{key}={values[key]}" for key in values)
        print(f"{name}: {parts}")
    return EXIT_OK


def cmd_serve(args, client: ServiceClient, settings: dict) -> int:
    import uvicorn

    uvicorn.run(create_app(), host=args.host, port=args.port, log_level="info")
    return EXIT_OK


def build_parser() -> _Parser:
    parser = _Parser(prog="claimtrust", description=__doc__.splitlines()[0])
    parser.add_argument("--config", help="path to a section.key = value config file")
    parser.add_argument("--server", help="remote service URL (default: run in-process)")
    parser.add_argument(
        "--set",
        action="append",
        metavar="KEY=VALUE",
        help="override one config key, repeatable",
    )
    commands = parser.add_subparsers(dest="command", required=True)

    p = commands.add_parser("ingest", help="load or generate a corpus, write canonical JSONL")
    p.add_argument("input", nargs="?", help="canonical corpus file (.csv or .jsonl)")
    p.add_argument("--synthetic", type=int, help="generate this many synthetic documents")
    p.add_argument("--seed", type=int, default=0, help="generator seed")
    p.add_argument("--trusted-fraction", type=float, default=0.25)
    p.add_argument("--true", dest="true_csv", help="raw CSV of vetted articles (with --fake)")
    p.add_argument("--fake", dest="fake_csv", help="raw CSV of unvetted articles (with --true)")
    p.add_argument("--date-from", help="raw filter: earliest publication date (ISO)")
    p.add_argument("--date-to", help="raw filter: latest publication date (ISO)")
    p.add_argument("--subject", help="raw filter: keep only this subject tag")
    p.add_argument("--out", required=True, help="canonical corpus JSONL path")
    p.set_defaults(func=cmd_ingest)

    p = commands.add_parser("extract", help="extract claims from every document")
    p.add_argument("--corpus", required=True)
    p.add_argument("--max-claims", type=int, default=8)
    p.add_argument("--out", required=True, help="claims JSONL path")
    p.set_defaults(func=cmd_extract)

    p = commands.add_parser("embed", help="build a binary embedding index")
    p.add_argument("--kind", choices=("claims", "documents"), required=True)
    p.add_argument("--claims", help="claims JSONL (kind=claims)")
    p.add_argument("--corpus", help="corpus JSONL (kind=documents)")
    p.add_argument("--out", required=True, help="index path (sidecar <out>.ids is written too)")
    p.set_defaults(func=cmd_embed)

    p = commands.add_parser("pairs", help="mine the most similar claim pairs")
    p.add_argument("--index", required=True, help="claim embedding index")
    p.add_argument("--claims", help="claims JSONL; enables same-document filtering")
    p.add_argument("--top-k", type=int)
    p.add_argument("--out", required=True, help="pairs JSONL path")
    p.set_defaults(func=cmd_pairs)

    p = commands.add_parser("classify", help="classify candidate pairs via the chat model")
    p.add_argument("--pairs", required=True)
    p.add_argument("--claims", required=True)
    p.add_argument("--out", required=True, help="relations JSONL path")
    p.add_argument("--stats-out", help="classification stats JSON (default <out>.stats.json)")
    p.set_defaults(func=cmd_classify)

    p = commands.add_parser("graph", help="aggregate relations into the signed document graph")
    p.add_argument("--corpus", required=True)
    p.add_argument("--claims", required=True)
    p.add_argument("--relations", required=True)
    p.add_argument("--out", required=True, help="edges JSONL path")
    p.set_defaults(func=cmd_graph)

    p = commands.add_parser("rank", help="propagate trust scores over the graph")
    p.add_argument("--corpus", required=True)
    p.add_argument("--graph", required=True, help="edges JSONL")
    p.add_argument("--out", required=True, help="scores JSONL path")
    p.set_defaults(func=cmd_rank)

    p = commands.add_parser("rerank", help="re-rank retrieval candidates by trust")
    p.add_argument("--scores", required=True)
    p.add_argument("--candidates", help="candidates JSONL (doc_id, similarity)")
    p.add_argument("--index", help="document embedding index (with --query)")
    p.add_argument("--query", help="retrieve candidates for this query text")
    p.add_argument("--limit", type=int, help="retrieval depth (with --query)")
    p.add_argument("--mode", choices=("vanilla", "score"), default="score")
    p.add_argument("--lambda", dest="lam", type=float, help="trust weight in [0, 1]")
    p.add_argument("--out", help="write ranked JSONL instead of printing")
    p.set_defaults(func=cmd_rerank)

    p = commands.add_parser("eval", help="run retrieval QA evaluation in both modes")
    p.add_argument("--corpus", required=True)
    p.add_argument("--index", required=True, help="document embedding index")
    p.add_argument("--scores", required=True)
    p.add_argument("--qa", required=True, help="QA JSONL (question, expected)")
    p.add_argument("--modes", default="vanilla,score", help="comma-separated mode list")
    p.add_argument("--lambda", dest="lam", type=float)
    p.add_argument("--out", help="per-question results JSONL")
    p.set_defaults(func=cmd_eval)

    p = commands.add_parser("stats", help="summarize pipeline artifacts")
    p.add_argument("--corpus")
    p.add_argument("--claims")
    p.add_argument("--relations")
    p.add_argument("--graph")
    p.add_argument("--scores")
    p.set_defaults(func=cmd_stats)

    p = commands.add_parser("serve", help="run the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "ingest":
        if bool(args.true_csv) != bool(args.fake_csv):
            parser.error("ingest raw mode needs both --true and --fake")
        sources = sum(
            [args.input is not None, args.synthetic is not None, bool(args.true_csv)]
        )
        if sources != 1:
            parser.error(
                "ingest needs exactly one of: an input file, --synthetic N, "
                "or --true with --fake"
            )
    if args.command == "embed":
        if args.kind == "claims" and not args.claims:
            parser.error("embed --kind claims needs --claims")
        if args.kind == "documents" and not args.corpus:
            parser.error("embed --kind documents needs --corpus")
    if args.command == "rerank" and not args.candidates and not (args.index and args.query):
        parser.error("rerank needs --candidates, or --index with --query")
    try:
        client = ServiceClient(args.server)
        return args.func(args, client, _settings(args))
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except ProviderError as exc:
        print(f"provider error: {exc}", file=sys.stderr)
        return EXIT_PROVIDER
    except ClaimTrustError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
