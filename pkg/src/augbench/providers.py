"""Chat, translation and embedding clients with a content-addressed response cache.

Every client talks to a *transport* with one method, ``send(endpoint, payload)
-> dict``. ``HttpTransport`` posts JSON over HTTP; the ``Mock*Transport``
classes answer locally and deterministically. The client layer adds caching,
retries, rate limiting and a bound on in-flight requests, and counts every
request that reaches the transport in ``network_calls``.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import random
import re
import tempfile
import threading
import time
from collections import Counter
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Callable, Protocol, Sequence

import httpx
import numpy as np

from .corpus import normalize

logger = logging.getLogger(__name__)

DEFAULT_MODEL = "gpt-3.5-turbo"
RETRYABLE_STATUS = frozenset({429, 500, 502, 503, 504})


class ProviderError(RuntimeError):
    """Any failure talking to an external (or mock) service."""


class TransportFailure(ProviderError):
    pass


class StatusError(ProviderError):
    def __init__(self, status: int, body: str = ""):
        super().__init__(f"HTTP {status}: {body[:200]}")
        self.status = status


class RateLimitExceeded(StatusError):
    pass


class MalformedResponse(ProviderError):
    pass


class CacheMiss(ProviderError):
    pass


@dataclass(frozen=True)
class GenerationParams:
    temperature: float = 0.25
    top_p: float = 0.4
    max_tokens: int = 256
    model_name: str = DEFAULT_MODEL

    def __post_init__(self):
        if not 0.0 <= self.temperature <= 2.0:
            raise ValueError("temperature must lie in [0, 2]")
        if not 0.0 < self.top_p <= 1.0:
            raise ValueError("top_p must lie in (0, 1]")
        if not isinstance(self.max_tokens, int) or self.max_tokens < 1:
            raise ValueError("max_tokens must be a positive integer")

    def digest(self) -> str:
        return hashlib.sha256(canonical_bytes(asdict(self))).hexdigest()[:16]


def canonical_bytes(obj) -> bytes:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False).encode("utf-8")


@dataclass(frozen=True)
class ProviderRequest:
    kind: str  # chat | translate | embed
    endpoint: str
    payload: bytes

    @property
    def digest(self) -> str:
        h = hashlib.sha256()
        h.update(self.endpoint.encode("utf-8"))
        h.update(b"\x00")
        h.update(self.payload)
        return h.hexdigest()


class ResponseCache:
    """One JSON file per request digest: ``{request, response, timestamp}``.

    Modes: ``readwrite`` serves hits and stores misses, ``replay`` serves hits
    and raises on a miss, ``record`` always calls through and overwrites.
    """

    MODES = ("readwrite", "replay", "record")

    def __init__(self, directory, mode: str = "readwrite"):
        if mode not in self.MODES:
            raise ValueError(f"cache mode must be one of {self.MODES}")
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)
        self.mode = mode
        self.hits = 0
        self.misses = 0
        self.touched: set[str] = set()
        self._lock = threading.Lock()

    def path_for(self, request: ProviderRequest) -> Path:
        return self.directory / f"{request.digest}.json"

    def get(self, request: ProviderRequest) -> dict | None:
        if self.mode == "record":
            return None
        path = self.path_for(request)
        with self._lock:
            self.touched.add(request.digest)
        try:
            entry = json.loads(path.read_text(encoding="utf-8"))
        except FileNotFoundError:
            with self._lock:
                self.misses += 1
            if self.mode == "replay":
                raise CacheMiss(f"no cached response for {request.kind} request {request.digest[:12]}")
            return None
        with self._lock:
            self.hits += 1
        return entry["response"]

    def put(self, request: ProviderRequest, response: dict) -> None:
        entry = {
            "request": {
                "kind": request.kind,
                "endpoint": request.endpoint,
                "payload": json.loads(request.payload),
            },
            "response": response,
            "timestamp": time.time(),
        }
        with self._lock:
            self.touched.add(request.digest)
        fd, tmp = tempfile.mkstemp(dir=self.directory, suffix=".tmp")
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            json.dump(entry, fh, ensure_ascii=False, sort_keys=True)
        os.replace(tmp, self.path_for(request))

    def digests(self) -> list[str]:
        return sorted(p.stem for p in self.directory.glob("*.json"))


class RateLimiter:
    """Token bucket; ``rate`` tokens per second, bursts up to ``capacity``."""

    def __init__(self, rate: float = 1.0, capacity: float = 1.0,
                 clock: Callable[[], float] = time.monotonic,
                 sleep: Callable[[float], None] = time.sleep):
        if rate <= 0 or capacity <= 0:
            raise ValueError("rate and capacity must be positive")
        self.rate = rate
        self.capacity = capacity
        self._clock = clock
        self._sleep = sleep
        self._tokens = capacity
        self._stamp = clock()
        self._lock = threading.Lock()

    def acquire(self) -> None:
        while True:
            with self._lock:
                now = self._clock()
                self._tokens = min(self.capacity, self._tokens + (now - self._stamp) * self.rate)
                self._stamp = now
                if self._tokens >= 1.0:
                    self._tokens -= 1.0
                    return
                wait = (1.0 - self._tokens) / self.rate
            self._sleep(wait)


class Transport(Protocol):
    def send(self, endpoint: str, payload: dict) -> dict: ...


class HttpTransport:
    """JSON-over-HTTP POST. The API key is read from ``api_key_env`` if set."""

    def __init__(self, client: httpx.Client | None = None, api_key_env: str | None = None,
                 timeout: float = 60.0):
        self.client = client or httpx.Client(timeout=timeout)
        self.api_key_env = api_key_env

    def send(self, endpoint: str, payload: dict) -> dict:
        headers = {"Content-Type": "application/json"}
        if self.api_key_env and os.environ.get(self.api_key_env):
            headers["Authorization"] = f"Bearer {os.environ[self.api_key_env]}"
        try:
            resp = self.client.post(endpoint, content=canonical_bytes(payload), headers=headers)
        except httpx.TransportError as exc:
            raise TransportFailure(f"{endpoint}: {exc}") from exc
        if resp.status_code == 429:
            raise RateLimitExceeded(429, resp.text)
        if not 200 <= resp.status_code < 300:
            raise StatusError(resp.status_code, resp.text)
        try:
            body = resp.json()
        except ValueError as exc:
            raise MalformedResponse(f"{endpoint}: response is not JSON") from exc
        if not isinstance(body, dict):
            raise MalformedResponse(f"{endpoint}: response is not a JSON object")
        return body


def _retryable(exc: ProviderError) -> bool:
    if isinstance(exc, TransportFailure):
        return True
    return isinstance(exc, StatusError) and exc.status in RETRYABLE_STATUS


class ProviderClient:
    kind = "generic"

    def __init__(self, transport: Transport, endpoint: str, cache: ResponseCache | None = None,
                 rate_limiter: RateLimiter | None = None, max_attempts: int = 3,
                 backoff: float = 1.0, max_in_flight: int = 4,
                 sleep: Callable[[float], None] = time.sleep):
        if max_attempts < 1:
            raise ValueError("max_attempts must be >= 1")
        self.transport = transport
        self.endpoint = endpoint
        self.cache = cache
        self.rate_limiter = rate_limiter
        self.max_attempts = max_attempts
        self.backoff = backoff
        self._sleep = sleep
        self._slots = threading.BoundedSemaphore(max_in_flight)
        self._count_lock = threading.Lock()
        self.network_calls = 0

    def call(self, payload: dict) -> dict:
        request = ProviderRequest(self.kind, self.endpoint, canonical_bytes(payload))
        if self.cache is not None:
            cached = self.cache.get(request)
            if cached is not None:
                return cached
        response = self._send_with_retry(payload)
        if self.cache is not None:
            self.cache.put(request, response)
        return response

    def _send_with_retry(self, payload: dict) -> dict:
        for attempt in range(1, self.max_attempts + 1):
            if self.rate_limiter is not None:
                self.rate_limiter.acquire()
            with self._count_lock:
                self.network_calls += 1
            try:
                with self._slots:
                    return self.transport.send(self.endpoint, payload)
            except ProviderError as exc:
                if not _retryable(exc) or attempt == self.max_attempts:
                    raise
                delay = self.backoff * 2 ** (attempt - 1)
                logger.warning("%s attempt %d failed (%s); retrying in %.1fs",
                               self.kind, attempt, exc, delay)
                self._sleep(delay)
        raise AssertionError("unreachable")


_ECHO = re.compile(r"^\s*generated tweet\s*:\s*", re.IGNORECASE)


def clean_completion(text: str) -> str:
    """Drop an echoed ``Generated tweet:`` cue and surrounding quotes/whitespace."""
    text = _ECHO.sub("", text.strip()).strip()
    if len(text) >= 2 and text[0] == text[-1] and text[0] in "\"'":
        text = text[1:-1].strip()
    return text


class ChatProvider(ProviderClient):
    kind = "chat"

    def chat_generate(self, prompt: str, params: GenerationParams | None = None) -> str:
        if not prompt or not prompt.strip():
            raise ValueError("prompt must be nonempty")
        params = params or GenerationParams()
        payload = {
            "model": params.model_name,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": params.temperature,
            "top_p": params.top_p,
            "max_tokens": params.max_tokens,
        }
        body = self.call(payload)
        try:
            content = body["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError) as exc:
            raise MalformedResponse("chat response lacks choices[0].message.content") from exc
        if not isinstance(content, str):
            raise MalformedResponse("chat completion content is not a string")
        return content.strip()


class TranslationProvider(ProviderClient):
    kind = "translate"

    def translate(self, text: str, source_lang: str, target_lang: str) -> str:
        if not text or not text.strip():
            raise ValueError("text to translate must be nonempty")
        if source_lang == target_lang:
            raise ValueError("source and target language must differ")
        body = self.call({"text": text, "source": source_lang, "target": target_lang})
        out = body.get("translation")
        if not isinstance(out, str):
            raise MalformedResponse("translation response lacks a string 'translation'")
        return out


class EmbeddingProvider(ProviderClient):
    kind = "embed"

    def __init__(self, *args, **kwargs):
        super().__init__(*args, **kwargs)
        self.dimension: int | None = None

    def embed(self, texts: Sequence[str]) -> list[np.ndarray]:
        texts = list(texts)
        if not texts:
            raise ValueError("embed needs at least one text")
        if any(not t for t in texts):
            raise ValueError("embed does not accept empty strings")
        body = self.call({"texts": texts})
        vectors = body.get("vectors")
        if not isinstance(vectors, list) or len(vectors) != len(texts):
            raise MalformedResponse("embedding response must hold one vector per text")
        out = []
        for v in vectors:
            arr = np.asarray(v, dtype=np.float64)
            if arr.ndim != 1 or not np.all(np.isfinite(arr)):
                raise MalformedResponse("embedding vectors must be finite 1-D arrays")
            if self.dimension is None:
                self.dimension = arr.shape[0]
            elif arr.shape[0] != self.dimension:
                raise ProviderError(
                    f"embedding dimension changed within a session: {arr.shape[0]} != {self.dimension}"
                )
            out.append(arr)
        return out

    def embed_documents(self, docs) -> np.ndarray:
        return np.vstack(self.embed([d.raw_text for d in docs]))


# ---------------------------------------------------------------- mocks

def _stable_seed(*parts) -> int:
    h = hashlib.sha256()
    for p in parts:
        h.update(str(p).encode("utf-8"))
        h.update(b"\x00")
    return int.from_bytes(h.digest()[:8], "big")


_BLOCK = re.compile(
    r"The following tweets belong to the category of '([^']+)':\n\n(.*?)(?:\n\n|\Z)", re.DOTALL
)
_ITEM = re.compile(r"^\d+\. ", re.MULTILINE)


def parse_prompt_blocks(prompt: str) -> dict[str, list[str]]:
    """Category name -> example texts, for prompts built by ``augment``."""
    blocks = {}
    for m in _BLOCK.finditer(prompt):
        items = [s.strip() for s in _ITEM.split(m.group(2)) if s.strip()]
        blocks[m.group(1)] = items
    return blocks


class MockChatTransport:
    """Seeded template filler over the prompt's example tokens.

    The completion draws tokens from the pooled Positive-block examples,
    weighted by frequency. When the prompt also carries a Negative block, a
    token's weight is divided by sqrt(1 + its count there), so the output leans
    on class-specific words.
    """

    positive_category = "hate speech towards gender"
    negative_category = "non-hate speech towards gender"

    def __init__(self, seed: int = 0):
        self.seed = seed

    def send(self, endpoint: str, payload: dict) -> dict:
        prompt = payload["messages"][-1]["content"]
        blocks = parse_prompt_blocks(prompt)
        positives = blocks.get(self.positive_category) or [prompt]
        counts = Counter(t for ex in positives for t in normalize(ex).split())
        negatives = blocks.get(self.negative_category) or []
        neg_counts = Counter(t for ex in negatives for t in normalize(ex).split())
        vocab = sorted(counts)
        weights = [counts[t] / (1 + neg_counts[t]) ** 0.5 for t in vocab]
        rng = random.Random(_stable_seed(self.seed, prompt))
        lengths = [len(normalize(ex).split()) for ex in positives]
        n = rng.randint(max(3, min(lengths)), max(3, max(lengths)))
        text = " ".join(rng.choices(vocab, weights, k=n)) if vocab else "..."
        return {"choices": [{"index": 0, "message": {"role": "assistant", "content": text}}]}


class MockTranslateTransport:
    """Word-by-word lookup table per (source, target) pair.

    Table values may be a word or a list of candidate words; lists are resolved
    by a hash of (seed, text, position). With ``reorder`` one adjacent word
    pair is swapped per call. No table and no reorder gives the identity.
    """

    def __init__(self, table: dict | None = None, seed: int = 0, reorder: bool = False):
        self.table = table or {}
        self.seed = seed
        self.reorder = reorder

    def send(self, endpoint: str, payload: dict) -> dict:
        text, src, tgt = payload["text"], payload["source"], payload["target"]
        mapping = self.table.get((src, tgt), {})
        words = text.split()
        out = []
        for i, w in enumerate(words):
            sub = mapping.get(w, mapping.get(w.lower(), w))
            if isinstance(sub, (list, tuple)):
                sub = sub[_stable_seed(self.seed, text, i) % len(sub)]
            out.append(sub)
        if self.reorder and len(out) >= 2:
            i = _stable_seed(self.seed, "swap", text, src, tgt) % (len(out) - 1)
            out[i], out[i + 1] = out[i + 1], out[i]
        return {"translation": " ".join(out)}


def mock_embedding(text: str, dimension: int = 16) -> np.ndarray:
    """Hashed bag-of-words projection, mean-pooled over tokens.

    Token t contributes sign(t) * e_{index(t)} with
    ``h = sha256(t)``, ``index = int(h[:8], big-endian) % dimension`` and
    ``sign = +1`` if ``h[8]`` is even else ``-1``. Tokens come from
    ``normalize(text).split()``; text without tokens maps to the zero vector.
    """
    vec = np.zeros(dimension)
    tokens = normalize(text).split()
    for t in tokens:
        h = hashlib.sha256(t.encode("utf-8")).digest()
        idx = int.from_bytes(h[:8], "big") % dimension
        vec[idx] += 1.0 if h[8] % 2 == 0 else -1.0
    return vec / len(tokens) if tokens else vec


class MockEmbedTransport:
    def __init__(self, dimension: int = 16):
        self.dimension = dimension

    def send(self, endpoint: str, payload: dict) -> dict:
        return {"vectors": [mock_embedding(t, self.dimension).tolist() for t in payload["texts"]]}


def mock_chat(seed: int = 0, **kwargs) -> ChatProvider:
    return ChatProvider(MockChatTransport(seed), "mock://chat", **kwargs)


def mock_translator(table: dict | None = None, seed: int = 0, reorder: bool = False,
                    **kwargs) -> TranslationProvider:
    return TranslationProvider(MockTranslateTransport(table, seed, reorder), "mock://translate",
                               **kwargs)


def mock_embedder(dimension: int = 16, **kwargs) -> EmbeddingProvider:
    return EmbeddingProvider(MockEmbedTransport(dimension), "mock://embed", **kwargs)


def http_chat(endpoint: str, api_key_env: str = "OPENAI_API_KEY", **kwargs) -> ChatProvider:
    kwargs.setdefault("rate_limiter", RateLimiter())
    return ChatProvider(HttpTransport(api_key_env=api_key_env), endpoint, **kwargs)


def http_translator(endpoint: str, api_key_env: str | None = None, **kwargs) -> TranslationProvider:
    kwargs.setdefault("rate_limiter", RateLimiter())
    return TranslationProvider(HttpTransport(api_key_env=api_key_env), endpoint, **kwargs)


def http_embedder(endpoint: str, api_key_env: str | None = None, **kwargs) -> EmbeddingProvider:
    kwargs.setdefault("rate_limiter", RateLimiter())
    return EmbeddingProvider(HttpTransport(api_key_env=api_key_env), endpoint, **kwargs)


class PrecomputedEmbeddings:
    """Vectors keyed by document id, loaded from JSONL rows ``{id, vector}``."""

    def __init__(self, vectors: dict[str, np.ndarray]):
        dims = {v.shape[0] for v in vectors.values()}
        if len(dims) > 1:
            raise ProviderError(f"precomputed embeddings mix dimensions {sorted(dims)}")
        self.vectors = vectors
        self.dimension = dims.pop() if dims else None

    @classmethod
    def load(cls, path) -> "PrecomputedEmbeddings":
        vectors = {}
        with Path(path).open(encoding="utf-8") as fh:
            for line, raw in enumerate(fh, start=1):
                if not raw.strip():
                    continue
                row = json.loads(raw)
                vec = np.asarray(row["vector"], dtype=np.float64)
                if vec.ndim != 1 or not np.all(np.isfinite(vec)):
                    raise ProviderError(f"{path}:{line}: vector must be finite and 1-D")
                vectors[str(row["id"])] = vec
        return cls(vectors)

    def save(self, path) -> None:
        with Path(path).open("w", encoding="utf-8") as fh:
            for doc_id, vec in self.vectors.items():
                fh.write(json.dumps({"id": doc_id, "vector": vec.tolist()}) + "\n")

    def embed_documents(self, docs) -> np.ndarray:
        missing = [d.id for d in docs if d.id not in self.vectors]
        if missing:
            raise ProviderError(f"no precomputed embedding for ids {missing[:5]}")
        return np.vstack([self.vectors[d.id] for d in docs])
