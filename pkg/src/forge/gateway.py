"""Chat-completion access across provider wire formats, with exponential backoff.

Wait times follow t_n = min(t_max, t0 * b**n).  A completed call reports how
many attempts it consumed; between failed attempts the gateway sleeps the
backoff schedule.  A scripted provider kind supplies deterministic or seeded
stochastic behavior for tests and offline runs.
"""

from __future__ import annotations

import json
import math
import os
import random
import time
from dataclasses import dataclass, field

import httpx

from .errors import (
    AuthMissing,
    ExhaustedRetries,
    MalformedResponse,
    PermanentProviderError,
    TransientProviderError,
)

ROLES = ("system", "user", "assistant")
PROVIDER_KINDS = ("openai_compatible", "gemini_style", "local_host", "scripted")

ENV_API_KEY = "FORGE_API_KEY"
ENV_BASE_URL = "FORGE_BASE_URL"
ENV_MODEL = "FORGE_MODEL"


@dataclass(frozen=True)
class ChatMessage:
    role: str
    content: str

    def __post_init__(self):
        if self.role not in ROLES:
            raise ValueError(f"role must be one of {ROLES}, got {self.role!r}")
        if not self.content:
            raise ValueError("message content must be non-empty")


@dataclass(frozen=True)
class CompletionRequest:
    model_id: str
    messages: tuple[ChatMessage, ...]
    temperature: float = 0.2
    max_tokens: int = 4096

    def __post_init__(self):
        if not self.messages:
            raise ValueError("messages must be non-empty")
        if not math.isfinite(self.temperature) or self.temperature < 0:
            raise ValueError("temperature must be finite and >= 0")
        if self.max_tokens < 1:
            raise ValueError("max_tokens must be >= 1")


@dataclass(frozen=True)
class RetryPolicy:
    """Backoff parameters: initial wait, factor, cap, and retry budget (seconds)."""

    initial_wait: float = 1.0
    backoff_factor: float = 2.0
    max_wait: float = 30.0
    max_retries: int = 5

    def __post_init__(self):
        if self.initial_wait <= 0:
            raise ValueError("initial_wait must be > 0")
        if self.backoff_factor < 1:
            raise ValueError("backoff_factor must be >= 1")
        if self.max_wait < self.initial_wait:
            raise ValueError("max_wait must be >= initial_wait")
        if self.max_retries < 0:
            raise ValueError("max_retries must be >= 0")


@dataclass
class ScriptedBehavior:
    """Test-double behavior for the scripted provider kind.

    Deterministic mode consumes ``failure_mask`` call by call; stochastic mode
    draws per-call success with probability ``per_call_success_p`` from
    Python's Mersenne Twister (``random.Random``) seeded explicitly, so runs
    are reproducible.  Successful calls consume ``responses`` in order; once
    the list is exhausted the last response repeats.
    """

    responses: list[str] = field(default_factory=list)
    failure_mask: list[bool] = field(default_factory=list)
    per_call_success_p: float | None = None
    seed: int | None = None

    calls_made: int = field(default=0, init=False)
    successes: int = field(default=0, init=False)
    _rng: random.Random | None = field(default=None, init=False, repr=False)

    def __post_init__(self):
        if self.per_call_success_p is not None:
            if not 0 < self.per_call_success_p <= 1:
                raise ValueError("per_call_success_p must be in (0, 1]")
            if self.seed is None:
                raise ValueError("stochastic scripted mode requires an explicit seed")
            self._rng = random.Random(self.seed)

    def next_outcome(self) -> bool:
        """Advance one call; True means this call succeeds."""
        index = self.calls_made
        self.calls_made += 1
        if self.per_call_success_p is not None:
            return self._rng.random() < self.per_call_success_p
        if index < len(self.failure_mask):
            return not self.failure_mask[index]
        return True

    def next_response(self) -> str:
        if not self.responses:
            raise MalformedResponse("scripted provider has no responses configured")
        index = min(self.successes, len(self.responses) - 1)
        self.successes += 1
        return self.responses[index]


@dataclass(frozen=True)
class ProviderProfile:
    """Which provider to talk to and how; immutable and safe to share."""

    kind: str = "openai_compatible"
    base_url: str = ""
    api_key_ref: str = ENV_API_KEY
    default_model: str = ""
    script: ScriptedBehavior | None = None

    def __post_init__(self):
        if self.kind not in PROVIDER_KINDS:
            raise ValueError(f"kind must be one of {PROVIDER_KINDS}, got {self.kind!r}")
        if self.kind != "scripted":
            if not self.base_url.startswith(("http://", "https://")):
                raise ValueError("base_url must be absolute for non-scripted kinds")
        if self.kind in ("openai_compatible", "gemini_style") and not self.api_key_ref:
            raise ValueError("api_key_ref must be non-empty for remote kinds")
        if self.kind == "scripted" and self.script is None:
            raise ValueError("scripted profile requires a ScriptedBehavior")


@dataclass(frozen=True)
class CompletionResult:
    text: str
    attempts_used: int


def backoff_wait(policy: RetryPolicy, attempt: int) -> float:
    """Wait before retry number ``attempt``: min(t_max, t0 * b**attempt)."""
    if attempt < 0:
        raise ValueError("attempt must be non-negative")
    return min(policy.max_wait, policy.initial_wait * policy.backoff_factor**attempt)


def retry_success_probability(p: float, k: int) -> float:
    """Probability the first success lands after exactly k failures: (1-p)**k * p."""
    if not 0 < p <= 1:
        raise ValueError("p must be in (0, 1]")
    if k < 0:
        raise ValueError("k must be non-negative")
    return (1 - p) ** k * p


def apply_temperature(logits: list[float], tau: float) -> list[float]:
    """softmax(logits / tau); components sum to 1.

    Used by the scripted provider's stochastic sampling helpers; remote
    providers apply temperature server-side.
    """
    if tau <= 0:
        raise ValueError("temperature must be > 0")
    if not logits:
        raise ValueError("logits must be non-empty")
    if not all(math.isfinite(x) for x in logits):
        raise ValueError("logits must all be finite")
    scaled = [x / tau for x in logits]
    peak = max(scaled)
    exps = [math.exp(x - peak) for x in scaled]
    total = sum(exps)
    return [e / total for e in exps]


def profile_from_env(kind: str = "openai_compatible") -> ProviderProfile:
    """Build a remote profile from FORGE_BASE_URL / FORGE_MODEL / FORGE_API_KEY."""
    return ProviderProfile(
        kind=kind,
        base_url=os.environ.get(ENV_BASE_URL, ""),
        api_key_ref=ENV_API_KEY,
        default_model=os.environ.get(ENV_MODEL, ""),
    )


class ProviderGateway:
    """Issues completion calls with retries; safe for concurrent use.

    ``transport`` posts JSON and returns (status_code, parsed_body); it exists
    so tests can fake the wire without a server.  ``sleeper`` is called with
    the backoff wait between failed attempts.
    """

    def __init__(self, transport=None, sleeper=time.sleep, timeout: float = 120.0):
        self._transport = transport or self._http_post
        self._sleep = sleeper
        self._timeout = timeout

    def complete(
        self,
        profile: ProviderProfile,
        request: CompletionRequest,
        policy: RetryPolicy,
    ) -> CompletionResult:
        """Run the retry loop; at most policy.max_retries + 1 underlying calls."""
        last_error: Exception | None = None
        for attempt in range(policy.max_retries + 1):
            try:
                text = self._call_once(profile, request)
                return CompletionResult(text=text, attempts_used=attempt + 1)
            except TransientProviderError as err:
                last_error = err
                if attempt < policy.max_retries:
                    self._sleep(backoff_wait(policy, attempt))
        raise ExhaustedRetries(
            f"no success after {policy.max_retries + 1} attempts: {last_error}",
            last_error=last_error,
        )

    # -- single attempt ----------------------------------------------------

    def _call_once(self, profile: ProviderProfile, request: CompletionRequest) -> str:
        if profile.kind == "scripted":
            if not profile.script.next_outcome():
                raise TransientProviderError("scripted failure")
            return profile.script.next_response()

        url, body, headers = build_wire_request(profile, request)
        try:
            status, payload = self._transport(url, body, headers)
        except httpx.HTTPError as err:
            raise TransientProviderError(f"transport error: {err}") from err

        if status == 429 or status >= 500:
            raise TransientProviderError(f"HTTP {status} from {url}")
        if status >= 400:
            raise PermanentProviderError(f"HTTP {status} from {url}")
        return extract_reply_text(profile.kind, payload)

    def _http_post(self, url: str, body: dict, headers: dict) -> tuple[int, object]:
        response = httpx.post(url, json=body, headers=headers, timeout=self._timeout)
        try:
            payload = response.json()
        except ValueError as err:
            raise MalformedResponse(f"non-JSON reply from {url}") from err
        return response.status_code, payload


def _require_key(profile: ProviderProfile) -> str:
    key = os.environ.get(profile.api_key_ref or ENV_API_KEY, "")
    if not key:
        key = os.environ.get(ENV_API_KEY, "")
    if not key:
        raise AuthMissing(
            f"API key not found; set {profile.api_key_ref or ENV_API_KEY}"
        )
    return key


def build_wire_request(
    profile: ProviderProfile, request: CompletionRequest
) -> tuple[str, dict, dict]:
    """Serialize (url, JSON body, headers) for the profile's wire format."""
    base = profile.base_url.rstrip("/")
    model = request.model_id or profile.default_model

    if profile.kind == "openai_compatible":
        key = _require_key(profile)
        url = f"{base}/chat/completions"
        body = {
            "model": model,
            "messages": [
                {"role": m.role, "content": m.content} for m in request.messages
            ],
            "temperature": request.temperature,
            "max_tokens": request.max_tokens,
        }
        headers = {"Authorization": f"Bearer {key}"}
        return url, body, headers

    if profile.kind == "gemini_style":
        key = _require_key(profile)
        url = f"{base}/models/{model}:generateContent"
        contents = []
        for m in request.messages:
            role = "model" if m.role == "assistant" else m.role
            contents.append({"role": role, "parts": [{"text": m.content}]})
        body = {
            "contents": contents,
            "generationConfig": {
                "temperature": request.temperature,
                "maxOutputTokens": request.max_tokens,
            },
        }
        headers = {"x-goog-api-key": key}
        return url, body, headers

    if profile.kind == "local_host":
        url = f"{base}/api/chat"
        body = {
            "model": model,
            "messages": [
                {"role": m.role, "content": m.content} for m in request.messages
            ],
            "stream": False,
            "options": {"temperature": request.temperature},
        }
        return url, body, {}

    raise ValueError(f"no wire format for kind {profile.kind!r}")


def extract_reply_text(kind: str, payload: object) -> str:
    """Pull the assistant text out of a provider reply; raise on schema mismatch."""
    try:
        if kind == "openai_compatible":
            return payload["choices"][0]["message"]["content"]
        if kind == "gemini_style":
            return payload["candidates"][0]["content"]["parts"][0]["text"]
        if kind == "local_host":
            return payload["message"]["content"]
    except (KeyError, IndexError, TypeError) as err:
        raise MalformedResponse(
            f"reply does not match {kind} schema: {json.dumps(payload)[:200]}"
        ) from err
    raise ValueError(f"no reply schema for kind {kind!r}")
