import hashlib
import json
import threading
import time

import httpx
import numpy as np
import pytest

from augbench.augment import build_dual_class_prompt
from augbench.corpus import Document, Label, normalize
from augbench.providers import (
    CacheMiss, ChatProvider, EmbeddingProvider, GenerationParams, HttpTransport,
    MalformedResponse, PrecomputedEmbeddings, ProviderError, ProviderRequest, RateLimiter,
    ResponseCache, StatusError, TransportFailure, canonical_bytes, clean_completion,
    mock_chat, mock_embedder, mock_embedding, mock_translator,
)

NEG = [f"cuaca cerah hari ini {i}" for i in range(5)]
POS = [f"perempuan bodoh tidak becus {i}" for i in range(5)]


class Recorder:
    """Scripted ``httpx.MockTransport`` handler that logs every request."""

    def __init__(self, script):
        self.script = list(script)
        self.requests = []

    def __call__(self, request: httpx.Request):
        self.requests.append(request)
        step = self.script.pop(0) if len(self.script) > 1 else self.script[0]
        if isinstance(step, Exception):
            raise step
        status, body = step
        if isinstance(body, (dict, list)):
            return httpx.Response(status, json=body)
        return httpx.Response(status, text=body)


def chat_body(text):
    return {"choices": [{"index": 0, "message": {"role": "assistant", "content": text}}]}


def http_chat_client(script, **kw):
    rec = Recorder(script)
    transport = HttpTransport(httpx.Client(transport=httpx.MockTransport(rec)), "TEST_API_KEY")
    sleeps = []
    client = ChatProvider(transport, "https://llm.test/v1/chat/completions",
                          sleep=sleeps.append, **kw)
    return client, rec, sleeps


def test_generation_params_defaults_and_validation():
    p = GenerationParams()
    assert (p.temperature, p.top_p, p.max_tokens) == (0.25, 0.4, 256)
    for bad in ({"temperature": 2.5}, {"top_p": 0.0}, {"max_tokens": 0}):
        with pytest.raises(ValueError):
            GenerationParams(**bad)
    assert p.digest() == GenerationParams().digest() != GenerationParams(top_p=0.5).digest()


def test_request_digest_pure_and_collision_free():
    seen = set()
    for i in range(500):
        payload = canonical_bytes({"text": f"t{i}", "source": "id", "target": "en"})
        r = ProviderRequest("translate", "mock://t", payload)
        assert r.digest == ProviderRequest("translate", "mock://t", payload).digest
        seen.add(r.digest)
    assert len(seen) == 500
    assert canonical_bytes({"b": 1, "a": 2}) == canonical_bytes({"a": 2, "b": 1})


def test_chat_wire_format_and_auth(monkeypatch):
    monkeypatch.setenv("TEST_API_KEY", "sk-test")
    client, rec, _ = http_chat_client([(200, chat_body('  Generated tweet: "halo"  '))])
    out = client.chat_generate("prompt text", GenerationParams())
    assert clean_completion(out) == "halo"
    req = rec.requests[0]
    assert req.headers["authorization"] == "Bearer sk-test"
    body = json.loads(req.content)
    assert body == {"model": "gpt-3.5-turbo", "messages": [{"role": "user", "content": "prompt text"}],
                    "temperature": 0.25, "top_p": 0.4, "max_tokens": 256}


def test_retry_then_success_with_backoff():
    client, rec, sleeps = http_chat_client([(503, "busy"), (429, "slow"), (200, chat_body("ok"))])
    assert client.chat_generate("p") == "ok"
    assert len(rec.requests) == 3 == client.network_calls
    assert sleeps == [1.0, 2.0]


def test_retry_budget_never_exceeded():
    client, rec, sleeps = http_chat_client([(500, "down")])
    with pytest.raises(StatusError):
        client.chat_generate("p")
    assert len(rec.requests) == 3
    client, rec, _ = http_chat_client([httpx.ConnectError("refused")])
    with pytest.raises(TransportFailure):
        client.chat_generate("p")
    assert len(rec.requests) == 3


def test_non_retryable_errors_fail_fast():
    client, rec, _ = http_chat_client([(400, "bad request")])
    with pytest.raises(StatusError):
        client.chat_generate("p")
    assert len(rec.requests) == 1
    client, rec, _ = http_chat_client([(200, "not json")])
    with pytest.raises(MalformedResponse):
        client.chat_generate("p")
    client, rec, _ = http_chat_client([(200, {"choices": []})])
    with pytest.raises(MalformedResponse):
        client.chat_generate("p")
    with pytest.raises(ValueError):
        client.chat_generate("   ")


def test_cache_readwrite_replay_record(tmp_path):
    cache = ResponseCache(tmp_path / "c")
    client, rec, _ = http_chat_client([(200, chat_body("first"))], cache=cache)
    a = client.chat_generate("same prompt")
    b = client.chat_generate("same prompt")
    assert a == b == "first"
    assert len(rec.requests) == 1
    files = list((tmp_path / "c").glob("*.json"))
    assert len(files) == 1
    entry = json.loads(files[0].read_text())
    assert set(entry) == {"request", "response", "timestamp"}

    replay = ResponseCache(tmp_path / "c", mode="replay")
    client2, rec2, _ = http_chat_client([(200, chat_body("never"))], cache=replay)
    assert client2.chat_generate("same prompt") == "first"
    assert client2.network_calls == 0 and not rec2.requests
    with pytest.raises(CacheMiss):
        client2.chat_generate("other prompt")

    record = ResponseCache(tmp_path / "c", mode="record")
    client3, rec3, _ = http_chat_client([(200, chat_body("second"))], cache=record)
    assert client3.chat_generate("same prompt") == "second"
    assert len(rec3.requests) == 1
    with pytest.raises(ValueError):
        ResponseCache(tmp_path / "c", mode="bogus")


def test_cache_roundtrip_is_byte_identical(tmp_path):
    cache = ResponseCache(tmp_path)
    chat = mock_chat(seed=3, cache=cache)
    prompts = [build_dual_class_prompt(NEG, [p + f" v{i}" for p in POS]) for i in range(5)]
    first = [chat.chat_generate(p).encode() for p in prompts]
    replay = mock_chat(seed=3, cache=ResponseCache(tmp_path, mode="replay"))
    assert [replay.chat_generate(p).encode() for p in prompts] == first
    assert replay.network_calls == 0


def test_mock_chat_deterministic_and_uses_positive_tokens():
    prompt = build_dual_class_prompt(NEG, POS)
    a = mock_chat(seed=1).chat_generate(prompt)
    assert a == mock_chat(seed=1).chat_generate(prompt)
    pos_tokens = {t for ex in POS for t in normalize(ex).split()}
    assert set(normalize(a).split()) <= pos_tokens
    assert len(normalize(a).split()) >= 3


def test_rate_limiter_token_bucket():
    now = [0.0]
    waits = []

    def sleep(s):
        waits.append(s)
        now[0] += s

    rl = RateLimiter(rate=2.0, capacity=1.0, clock=lambda: now[0], sleep=sleep)
    for _ in range(5):
        rl.acquire()
    assert waits == [0.5] * 4
    assert now[0] == pytest.approx(2.0)


def test_in_flight_bound():
    active, peak = [0], [0]
    lock = threading.Lock()

    class Slow:
        def send(self, endpoint, payload):
            with lock:
                active[0] += 1
                peak[0] = max(peak[0], active[0])
            time.sleep(0.02)
            with lock:
                active[0] -= 1
            return chat_body("x")

    client = ChatProvider(Slow(), "mock://slow", max_in_flight=4)
    threads = [threading.Thread(target=client.chat_generate, args=(f"p{i}",)) for i in range(16)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert 1 <= peak[0] <= 4
    assert client.network_calls == 16


def test_translate_contracts():
    tr = mock_translator()
    with pytest.raises(ValueError):
        tr.translate("", "id", "en")
    with pytest.raises(ValueError):
        tr.translate("halo", "id", "id")
    assert tr.translate("saya suka kopi", "id", "en") == "saya suka kopi"
    table = {("id", "en"): {"suka": "like", "kopi": "coffee"},
             ("en", "id"): {"like": ["gemar", "suka"], "coffee": "kopi"}}
    pert = mock_translator(table, seed=0)
    src = "saya suka kopi"
    back = pert.translate(pert.translate(src, "id", "en"), "en", "id")
    assert back.split() != src.split()
    assert back == mock_translator(table, seed=0).translate(
        mock_translator(table, seed=0).translate(src, "id", "en"), "en", "id")


def _hand_embedding(text, d=16):
    vec = [0.0] * d
    toks = text.split()
    for t in toks:
        h = hashlib.sha256(t.encode()).digest()
        vec[int.from_bytes(h[:8], "big") % d] += 1.0 if h[8] % 2 == 0 else -1.0
    return [v / len(toks) for v in vec]


def test_mock_embedder_contracts():
    emb = mock_embedder(16)
    vs = emb.embed(["a b a", "c", "a b a"])
    assert len(vs) == 3 and all(v.shape == (16,) for v in vs)
    np.testing.assert_array_equal(vs[0], vs[2])
    np.testing.assert_allclose(vs[0], _hand_embedding("a b a"), atol=1e-15)
    np.testing.assert_allclose(mock_embedding("a b a"), _hand_embedding("a b a"), atol=1e-15)
    with pytest.raises(ValueError):
        emb.embed([])
    with pytest.raises(ValueError):
        emb.embed(["ok", ""])


def test_embedding_dimension_change_is_an_error():
    class Flaky:
        calls = 0

        def send(self, endpoint, payload):
            Flaky.calls += 1
            return {"vectors": [[0.0] * (3 + Flaky.calls) for _ in payload["texts"]]}

    emb = EmbeddingProvider(Flaky(), "mock://flaky")
    emb.embed(["x"])
    with pytest.raises(ProviderError, match="dimension"):
        emb.embed(["y"])


def test_precomputed_embeddings_roundtrip(tmp_path):
    vecs = {"a": np.array([1.0, 0.0]), "b": np.array([0.0, 2.0])}
    PrecomputedEmbeddings(vecs).save(tmp_path / "e.jsonl")
    pe = PrecomputedEmbeddings.load(tmp_path / "e.jsonl")
    docs = [Document("b", "x", Label.POSITIVE), Document("a", "y", Label.POSITIVE)]
    np.testing.assert_array_equal(pe.embed_documents(docs), [[0.0, 2.0], [1.0, 0.0]])
    with pytest.raises(ProviderError):
        pe.embed_documents([Document("zz", "x", Label.POSITIVE)])


def test_clean_completion():
    assert clean_completion("Generated tweet: 'hai kamu'") == "hai kamu"
    assert clean_completion('  "kutip"  ') == "kutip"
    assert clean_completion("biasa") == "biasa"
