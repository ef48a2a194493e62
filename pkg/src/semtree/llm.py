"""Remote LLM client: chat-completion transport, retries, token accounting.

Anything that maps a prompt string to a response string (or a
:class:`Completion`) can act as a transport, which is how tests and the
offline stand-ins in :mod:`semtree.offline` plug in.
"""

from __future__ import annotations

import json
import logging
import os
import random
import threading
import time
import urllib.error
import urllib.request
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence, TypeVar

from . import prompts
from .prompts import ResponseParseError
from .scoring import Candidate, ScorerError, ScorerOutput, estimate_tokens

logger = logging.getLogger(__name__)

T = TypeVar("T")


@dataclass(frozen=True)
class LlmEndpointConfig:
    base_url: str = "http://localhost:8000/v1"
    model_name: str = "default"
    api_key_env_var: str = "SEMTREE_API_KEY"
    thinking_budget: int = -1
    max_retries: int = 3
    timeout: float = 120.0
    temperature: float = 0.0
    max_in_flight: int = 8
    backoff_base: float = 1.0
    backoff_max: float = 30.0

    def __post_init__(self):
        if self.max_retries < 0:
            raise ValueError("max_retries must be >= 0")
        if self.max_in_flight < 1:
            raise ValueError("max_in_flight must be >= 1")

    @classmethod
    def from_dict(cls, d: dict) -> "LlmEndpointConfig":
        known = {k: v for k, v in d.items() if k in cls.__dataclass_fields__}
        return cls(**known)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class Completion:
    text: str
    input_tokens: int | None = None
    output_tokens: int | None = None


class TransportError(RuntimeError):
    pass


class LlmCallError(ScorerError):
    """Retries exhausted; ``raw`` holds the last response text if any."""

    def __init__(self, message: str, raw: str | None = None, kind: str = "transport"):
        super().__init__(message, raw)
        self.kind = kind


Transport = Callable[[str], "Completion | str"]


class HttpTransport:
    """POST to an OpenAI-style ``/chat/completions`` endpoint.

    The thinking budget is forwarded as a top-level ``thinking_budget`` field;
    providers that name it differently need a custom transport.
    """

    def __init__(self, config: LlmEndpointConfig):
        self.config = config

    def build_request(self, prompt: str) -> dict:
        return {
            "model": self.config.model_name,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": self.config.temperature,
            "thinking_budget": self.config.thinking_budget,
        }

    def __call__(self, prompt: str) -> Completion:
        cfg = self.config
        key = os.environ.get(cfg.api_key_env_var)
        headers = {"Content-Type": "application/json"}
        if key:
            headers["Authorization"] = f"Bearer {key}"
        req = urllib.request.Request(
            cfg.base_url.rstrip("/") + "/chat/completions",
            data=json.dumps(self.build_request(prompt)).encode("utf-8"),
            headers=headers,
            method="POST",
        )
        try:
            with urllib.request.urlopen(req, timeout=cfg.timeout) as resp:
                body = json.loads(resp.read().decode("utf-8"))
        except (urllib.error.URLError, TimeoutError, OSError, json.JSONDecodeError) as e:
            raise TransportError(str(e)) from e
        try:
            text = body["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError) as e:
            raise TransportError(f"unexpected response shape: {e}") from e
        usage = body.get("usage") or {}
        return Completion(text, usage.get("prompt_tokens"), usage.get("completion_tokens"))


@dataclass
class TokenLedger:
    calls: int = 0
    attempts: int = 0
    failures: int = 0
    input_tokens: int = 0
    output_tokens: int = 0
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False, compare=False)

    def add(self, completion: Completion, prompt: str) -> tuple[int, int]:
        n_in = completion.input_tokens if completion.input_tokens is not None else estimate_tokens(prompt)
        n_out = completion.output_tokens if completion.output_tokens is not None else estimate_tokens(completion.text)
        with self._lock:
            self.attempts += 1
            self.input_tokens += n_in
            self.output_tokens += n_out
        return n_in, n_out

    def snapshot(self) -> dict:
        with self._lock:
            return {
                "calls": self.calls,
                "attempts": self.attempts,
                "failures": self.failures,
                "input_tokens": self.input_tokens,
                "output_tokens": self.output_tokens,
            }


class LlmClient:
    """Send a prompt, parse the reply, retry both steps with exponential backoff."""

    def __init__(
        self,
        transport: Transport | None = None,
        config: LlmEndpointConfig | None = None,
        sleep: Callable[[float], None] = time.sleep,
        seed: int = 0,
    ):
        self.config = config or LlmEndpointConfig()
        self.transport = transport or HttpTransport(self.config)
        self.ledger = TokenLedger()
        self._sleep = sleep
        self._slots = threading.BoundedSemaphore(self.config.max_in_flight)
        self._jitter = random.Random(seed)

    def backoff(self, attempt: int) -> float:
        base = self.config.backoff_base * (2**attempt)
        return min(self.config.backoff_max, base) * (0.5 + 0.5 * self._jitter.random())

    def request(self, prompt: str, parse: Callable[[str], T]) -> tuple[T, Completion, int, int]:
        """Return ``(parsed, completion, input_tokens, output_tokens)``.

        Token counts cover every attempt made for this request.
        """
        last_raw = None
        last_err: Exception | None = None
        tok_in = tok_out = 0
        with self.ledger._lock:
            self.ledger.calls += 1
        for attempt in range(self.config.max_retries + 1):
            if attempt:
                self._sleep(self.backoff(attempt - 1))
            try:
                with self._slots:
                    out = self.transport(prompt)
            except TransportError as e:
                last_err = e
                logger.warning("transport failure (attempt %d): %s", attempt + 1, e)
                continue
            completion = out if isinstance(out, Completion) else Completion(str(out))
            n_in, n_out = self.ledger.add(completion, prompt)
            tok_in += n_in
            tok_out += n_out
            last_raw = completion.text
            try:
                return parse(completion.text), completion, tok_in, tok_out
            except ResponseParseError as e:
                last_err = e
                logger.warning("unparseable response (attempt %d): %s", attempt + 1, e)
        with self.ledger._lock:
            self.ledger.failures += 1
        kind = last_err.kind.value if isinstance(last_err, ResponseParseError) else "transport"
        raise LlmCallError(
            f"giving up after {self.config.max_retries + 1} attempts: {last_err}", raw=last_raw, kind=kind
        )


def as_client(llm: "LlmClient | Transport", **config) -> LlmClient:
    if isinstance(llm, LlmClient):
        return llm
    config.setdefault("backoff_base", 0.0)
    return LlmClient(llm, LlmEndpointConfig(**config))


class LlmScorer:
    """Listwise scorer backed by a remote model and the scoring prompt."""

    def __init__(
        self,
        client: LlmClient | Transport,
        max_chars_per_candidate: int | None = 2000,
        template: str | None = None,
        memoize: bool = True,
    ):
        self.client = as_client(client)
        self.max_chars = max_chars_per_candidate
        self.template = template if template is not None else prompts.load_template(prompts.SCORING)
        self._memo: dict[tuple, ScorerOutput] | None = {} if memoize else None
        self._memo_lock = threading.Lock()

    def build_prompt(self, query: str, candidates: Sequence[Candidate], relevance_definition: str = "") -> str:
        return prompts.render_scoring_prompt(
            query, [c.text for c in candidates], relevance_definition, self.max_chars, self.template
        )

    def __call__(self, query, candidates, relevance_definition="", slate_id=0) -> ScorerOutput:
        if not candidates:
            raise ValueError("empty slate")
        key = (query, relevance_definition, tuple(c.node_id for c in candidates))
        if self._memo is not None:
            with self._memo_lock:
                hit = self._memo.get(key)
            if hit is not None:
                return ScorerOutput(hit.scores, hit.reasoning, hit.ranking, 0, 0, hit.flags + ["memo"])
        prompt = self.build_prompt(query, candidates, relevance_definition)
        n = len(candidates)
        parsed, _, tok_in, tok_out = self.client.request(prompt, lambda raw: prompts.parse_scoring_response(raw, n))
        out = ScorerOutput(parsed.scores, parsed.reasoning, parsed.ranking, tok_in, tok_out, parsed.flags)
        if self._memo is not None:
            with self._memo_lock:
                self._memo[key] = out
        return out
