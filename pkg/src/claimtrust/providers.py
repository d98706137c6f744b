"""Provider boundary: chat-completion and embedding clients.

The HTTP client speaks the OpenAI-compatible wire protocol
(POST {base_url}/v1/chat/completions and POST {base_url}/v1/embeddings with
bearer-token auth) because that is the de-facto standard local model servers
expose. Embedding vectors are L2-normalized here so that cosine similarity
downstream reduces to a dot product.

MockProvider is a fully deterministic in-process stand-in: given a seed it
produces the same completions and the same embedding vectors on every run, so
the whole pipeline is reproducible offline.
"""

import hashlib
import random
import re
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import httpx
import numpy as np

from .errors import ProtocolError, ProviderError, ProviderTimeout, ValidationError
from .text import normalize_whitespace, split_sentences

CHAT_PATH = "/v1/chat/completions"
EMBED_PATH = "/v1/embeddings"

BACKOFF_BASE_SECONDS = 0.2
RETRYABLE_STATUS = frozenset({429})


@dataclass(frozen=True)
class ProviderConfig:
    """Connection settings for an OpenAI-compatible endpoint."""

    base_url: str
    chat_model: str
    embed_model: str
    api_key: str | None = None
    timeout: float = 60.0
    max_retries: int = 2
    temperature: float = 0.0
    max_in_flight: int = 4

    def __post_init__(self):
        if self.timeout <= 0:
            raise ValidationError(f"timeout must be positive, got {self.timeout}")
        if self.max_retries < 0:
            raise ValidationError(f"max_retries must be >= 0, got {self.max_retries}")
        if not 0.0 <= self.temperature <= 2.0:
            raise ValidationError(f"temperature must be in [0, 2], got {self.temperature}")
        if self.max_in_flight < 1:
            raise ValidationError(f"max_in_flight must be >= 1, got {self.max_in_flight}")


def _normalize_rows(rows: Sequence[Sequence[float]]) -> list[np.ndarray]:
    out = []
    for row in rows:
        vec = np.asarray(row, dtype=np.float64)
        norm = float(np.linalg.norm(vec))
        if norm == 0.0:
            raise ProtocolError("endpoint returned a zero embedding vector")
        out.append(vec / norm)
    return out


def _check_dims(vectors: list[np.ndarray]) -> None:
    dims = {v.shape[0] for v in vectors}
    if len(dims) > 1:
        raise ProtocolError(f"inconsistent embedding dimensions in one batch: {sorted(dims)}")


class HttpProvider:
    """Synchronous client with retry/backoff for both endpoint kinds.

    Retries use exponential backoff with jitter; total attempts are
    max_retries + 1. Server errors (5xx) and 429 are retried, other client
    errors (auth failures included) are not. The client object is immutable
    after construction and safe to call from several threads at once.
    """

    def __init__(
        self,
        config: ProviderConfig,
        client: httpx.Client | None = None,
        sleeper: Callable[[float], None] = time.sleep,
        rng: random.Random | None = None,
    ):
        self.config = config
        self.max_in_flight = config.max_in_flight
        self._client = client or httpx.Client()
        self._sleeper = sleeper
        self._rng = rng or random.Random()

    def chat(self, system_prompt: str, user_prompt: str) -> str:
        payload = {
            "model": self.config.chat_model,
            "temperature": self.config.temperature,
            "messages": [
                {"role": "system", "content": system_prompt},
                {"role": "user", "content": user_prompt},
            ],
        }
        envelope = self._post(CHAT_PATH, payload)
        try:
            content = envelope["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError) as exc:
            raise ProtocolError(f"malformed chat completion envelope: {exc!r}") from exc
        if not isinstance(content, str):
            raise ProtocolError(f"completion content is not text: {type(content).__name__}")
        return content

    def embed(self, texts: Sequence[str]) -> list[np.ndarray]:
        if not texts:
            raise ValidationError("embed requires at least one text")
        payload = {"model": self.config.embed_model, "input": list(texts)}
        envelope = self._post(EMBED_PATH, payload)
        try:
            data = envelope["data"]
            rows = [entry["embedding"] for entry in sorted(data, key=lambda e: e["index"])]
        except (KeyError, TypeError) as exc:
            raise ProtocolError(f"malformed embeddings envelope: {exc!r}") from exc
        if len(rows) != len(texts):
            raise ProtocolError(f"asked for {len(texts)} embeddings, got {len(rows)}")
        vectors = _normalize_rows(rows)
        _check_dims(vectors)
        return vectors

    def _post(self, path: str, payload: dict) -> dict:
        url = self.config.base_url.rstrip("/") + path
        headers = {}
        if self.config.api_key:
            headers["Authorization"] = f"Bearer {self.config.api_key}"
        attempts = self.config.max_retries + 1
        failure: ProviderError | None = None
        for attempt in range(attempts):
            if attempt > 0:
                self._sleeper(self._backoff(attempt))
            try:
                response = self._client.post(
                    url, json=payload, headers=headers, timeout=self.config.timeout
                )
            except httpx.TimeoutException:
                failure = ProviderTimeout(
                    f"no answer from {url} within {self.config.timeout}s"
                )
                continue
            except httpx.HTTPError as exc:
                failure = ProviderError(f"request to {url} failed: {exc}")
                continue
            if 200 <= response.status_code < 300:
                try:
                    return response.json()
                except ValueError as exc:
                    raise ProtocolError(f"endpoint returned non-JSON body: {exc}") from exc
            failure = ProviderError(
                "endpoint rejected request",
                status=response.status_code,
                body=response.text,
            )
            retryable = response.status_code >= 500 or response.status_code in RETRYABLE_STATUS
            if not retryable:
                raise failure
        assert failure is not None
        raise failure

    def _backoff(self, attempt: int) -> float:
        base = BACKOFF_BASE_SECONDS * (2 ** (attempt - 1))
        return base + self._rng.uniform(0.0, base)


class MockProvider:
    """Seeded, deterministic chat + embedding provider for offline runs.

    Embeddings are unit vectors derived from a keyed hash of the text, so the
    same text always maps to the same vector. Chat replies are synthesized
    from the prompt itself:

    - a prompt asking for claims (contains a ``<<< ... >>>`` fenced document
      and the words "numbered list") gets the document's sentences back as a
      numbered list;
    - a comparison prompt (contains "ANSWER:" in its instructions plus
      "Claim A:"/"Claim B:" lines) gets a verdict line: identical claim texts
      support each other, otherwise the verdict is hashed from the pair;
    - a grading prompt (contains "SCORE:") gets a hashed score in [0, 1];
    - a question-answering prompt (contains "Context:" and "Question:")
      answers with the first sentence of the first context document;
    - anything else is echoed back verbatim.
    """

    def __init__(self, seed: int = 0, dim: int = 64, max_in_flight: int = 1):
        if dim < 2:
            raise ValidationError(f"mock embedding dim must be >= 2, got {dim}")
        self.seed = seed
        self.dim = dim
        self.max_in_flight = max_in_flight

    def _digest(self, *parts: str) -> bytes:
        h = hashlib.blake2b(digest_size=16)
        h.update(str(self.seed).encode())
        for part in parts:
            h.update(b"\x00")
            h.update(part.encode("utf-8"))
        return h.digest()

    def embed(self, texts: Sequence[str]) -> list[np.ndarray]:
        if not texts:
            raise ValidationError("embed requires at least one text")
        vectors = []
        for text in texts:
            rng = np.random.default_rng(int.from_bytes(self._digest("embed", text), "big"))
            vec = rng.standard_normal(self.dim)
            vectors.append(vec / np.linalg.norm(vec))
        return vectors

    def chat(self, system_prompt: str, user_prompt: str) -> str:
        combined = f"{system_prompt}\n{user_prompt}"
        if "ANSWER:" in combined:
            reply = self._classification_reply(combined)
            if reply is not None:
                return reply
        if "SCORE:" in combined:
            return self._judge_reply(user_prompt)
        if "numbered list" in combined:
            reply = self._extraction_reply(user_prompt)
            if reply is not None:
                return reply
        if "Context:" in user_prompt and "Question:" in user_prompt:
            return self._answer_reply(user_prompt)
        return user_prompt

    def _classification_reply(self, combined: str) -> str | None:
        claims_a = re.findall(r"Claim A:\s*(.*)", combined)
        claims_b = re.findall(r"Claim B:\s*(.*)", combined)
        if not claims_a or not claims_b:
            return None
        a = normalize_whitespace(claims_a[-1])
        b = normalize_whitespace(claims_b[-1])
        if a.casefold() == b.casefold():
            verdict = 1
        else:
            key = "|".join(sorted((a.casefold(), b.casefold())))
            verdict = (1, -1, 0, 0)[self._digest("classify", key)[0] % 4]
        return f"The two statements were compared for agreement.\nANSWER: {verdict}"

    def _judge_reply(self, user_prompt: str) -> str:
        score = (self._digest("judge", user_prompt)[0] % 101) / 100.0
        return f"The answer was checked against the expected one.\nSCORE: {score:.2f}"

    def _extraction_reply(self, user_prompt: str) -> str | None:
        blocks = re.findall(r"<<<\n(.*?)\n>>>", user_prompt, flags=re.S)
        if not blocks:
            return None
        sentences = split_sentences(blocks[-1])[:8]
        lines = [f"{i + 1}. {sentence}" for i, sentence in enumerate(sentences)]
        return "Claims:\n" + "\n".join(lines)

    def _answer_reply(self, user_prompt: str) -> str:
        tagged = re.findall(r"\[(\d{4}) \| trust [0-9.]+\]\s*(.*)", user_prompt)
        if not tagged:
            return "No context documents were provided."
        doc_id, body = tagged[0]
        sentences = split_sentences(body)
        lead = sentences[0] if sentences else body
        return f"Document {doc_id} reports: {lead}"


def provider_from_settings(settings: dict) -> HttpProvider | MockProvider:
    """Build a provider from flat settings (CLI config or a service request)."""
    kind = settings.get("kind", "mock")
    if kind == "mock":
        return MockProvider(
            seed=int(settings.get("seed", 0)),
            dim=int(settings.get("dim", 64)),
            max_in_flight=int(settings.get("max_in_flight", 1)),
        )
    if kind == "openai":
        base_url = settings.get("base_url")
        if not base_url:
            raise ValidationError("provider kind 'openai' requires base_url")
        config = ProviderConfig(
            base_url=base_url,
            chat_model=settings.get("chat_model", "gemma2"),
            embed_model=settings.get("embed_model", "mxbai-embed-large"),
            api_key=settings.get("api_key") or None,
            timeout=float(settings.get("timeout", 60.0)),
            max_retries=int(settings.get("max_retries", 2)),
            temperature=float(settings.get("temperature", 0.0)),
            max_in_flight=int(settings.get("max_in_flight", 4)),
        )
        return HttpProvider(config)
    raise ValidationError(f"unknown provider kind: {kind!r}")


def bounded_map(func: Callable, items: Iterable, max_in_flight: int) -> list:
    """Apply func to items with at most max_in_flight concurrent calls.

    Results come back in input order regardless of completion order. func must
    handle its own per-item failures when the batch should not abort.
    """
    items = list(items)
    if max_in_flight <= 1 or len(items) <= 1:
        return [func(item) for item in items]
    with ThreadPoolExecutor(max_workers=max_in_flight) as pool:
        return list(pool.map(func, items))
