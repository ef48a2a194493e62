from __future__ import annotations

import json
import threading
from http.server import BaseHTTPRequestHandler, HTTPServer

import pytest

from semtree.llm import (
    Completion,
    HttpTransport,
    LlmCallError,
    LlmClient,
    LlmEndpointConfig,
    LlmScorer,
    TransportError,
    as_client,
)
from semtree.prompts import parse_summary_response
from semtree.scoring import Candidate


def reply(scores):
    return json.dumps({"reasoning": "r", "ranking": list(range(len(scores))),
                       "relevance_scores": [[k, s] for k, s in enumerate(scores)]})


class Scripted:
    """Transport that replays a list of outcomes (strings or exceptions)."""

    def __init__(self, outcomes):
        self.outcomes = list(outcomes)
        self.prompts = []

    def __call__(self, prompt):
        self.prompts.append(prompt)
        out = self.outcomes.pop(0)
        if isinstance(out, Exception):
            raise out
        return out


def client(transport, **cfg):
    sleeps = []
    c = LlmClient(transport, LlmEndpointConfig(**cfg), sleep=sleeps.append)
    return c, sleeps


def test_retries_transport_then_succeeds():
    t = Scripted([TransportError("503"), TransportError("timeout"), '{"summary": "ok"}'])
    c, sleeps = client(t, max_retries=3, backoff_base=1.0)
    parsed, *_ = c.request("p", parse_summary_response)
    assert parsed == "ok"
    assert len(sleeps) == 2 and sleeps[1] > sleeps[0] * 0.5
    assert c.ledger.calls == 1 and c.ledger.failures == 0


def test_retries_parse_errors_then_gives_up():
    t = Scripted(["garbage"] * 3)
    c, sleeps = client(t, max_retries=2)
    with pytest.raises(LlmCallError) as err:
        c.request("p", parse_summary_response)
    assert err.value.kind == "not_json"
    assert err.value.raw == "garbage"
    assert c.ledger.failures == 1
    assert len(t.prompts) == 3


def test_backoff_is_capped():
    c, _ = client(Scripted([]), backoff_base=1.0, backoff_max=4.0)
    assert all(c.backoff(k) <= 4.0 for k in range(10))


def test_token_accounting_prefers_reported_usage():
    t = Scripted([Completion('{"summary": "x"}', 123, 7), '{"summary": "y"}'])
    c, _ = client(t)
    _, _, tin, tout = c.request("abcdefgh", parse_summary_response)
    assert (tin, tout) == (123, 7)
    _, _, tin, tout = c.request("abcdefgh", parse_summary_response)
    assert tin == 2 and tout >= 1  # estimated from characters
    assert c.ledger.input_tokens == 125


def test_scorer_memoizes_identical_slates():
    t = Scripted([reply([80, 20])])
    s = LlmScorer(as_client(t))
    cands = [Candidate("a", "alpha"), Candidate("b", "beta")]
    first = s("q", cands)
    second = s("q", cands)
    assert first.scores == second.scores == [0.8, 0.2]
    assert "memo" in second.flags and second.input_tokens == 0
    assert len(t.prompts) == 1


def test_scorer_prompt_contains_candidates_in_order():
    t = Scripted([reply([1, 2, 3])])
    s = LlmScorer(as_client(t))
    s("what?", [Candidate("x", "one"), Candidate("y", "two"), Candidate("z", "three")])
    p = t.prompts[0]
    assert "[0] one\n\n[1] two\n\n[2] three" in p
    assert "what?" in p


def test_endpoint_config_round_trip_and_validation():
    cfg = LlmEndpointConfig(model_name="m", thinking_budget=512)
    assert LlmEndpointConfig.from_dict(cfg.to_dict() | {"unknown": 1}) == cfg
    with pytest.raises(ValueError):
        LlmEndpointConfig(max_retries=-1)
    with pytest.raises(ValueError):
        LlmEndpointConfig(max_in_flight=0)


class _Handler(BaseHTTPRequestHandler):
    seen: list = []

    def do_POST(self):  # noqa: N802
        body = json.loads(self.rfile.read(int(self.headers["Content-Length"])))
        _Handler.seen.append((self.path, self.headers.get("Authorization"), body))
        payload = {"choices": [{"message": {"content": '{"summary": "from server"}'}}],
                   "usage": {"prompt_tokens": 11, "completion_tokens": 3}}
        data = json.dumps(payload).encode()
        self.send_response(200)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)

    def log_message(self, *args):
        pass


@pytest.fixture
def server():
    httpd = HTTPServer(("127.0.0.1", 0), _Handler)
    th = threading.Thread(target=httpd.serve_forever, daemon=True)
    th.start()
    yield f"http://127.0.0.1:{httpd.server_address[1]}/v1"
    httpd.shutdown()


def test_http_transport_round_trip(server, monkeypatch):
    monkeypatch.setenv("MY_KEY", "secret")
    cfg = LlmEndpointConfig(base_url=server, model_name="m1", api_key_env_var="MY_KEY", thinking_budget=64)
    out = HttpTransport(cfg)("hello")
    assert out.text == '{"summary": "from server"}'
    assert (out.input_tokens, out.output_tokens) == (11, 3)
    path, auth, body = _Handler.seen[-1]
    assert path == "/v1/chat/completions"
    assert auth == "Bearer secret"
    assert body["model"] == "m1" and body["thinking_budget"] == 64
    assert body["messages"] == [{"role": "user", "content": "hello"}]


def test_http_transport_connection_failure():
    cfg = LlmEndpointConfig(base_url="http://127.0.0.1:9", timeout=1)
    with pytest.raises(TransportError):
        HttpTransport(cfg)("hello")
