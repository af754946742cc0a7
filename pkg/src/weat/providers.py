"""Chat-completion providers and response parsing.

Three provider kinds share one entry point: ``live`` talks to a
chat-completion HTTP endpoint, ``mock`` serves hand-authored fixture files,
and ``replay`` serves responses previously recorded from live traffic.
Fixtures are one directory per example holding ``round-<r>.txt`` files with
the verbatim response text; live calls record into the same layout so any
authoring session can be replayed.

The parser enforces the prompt's output contract (``N: explanation`` lines)
and never loses text: every response line ends up in a parsed entry, in a
dropped fragment with a reason, or is whitespace.
"""

from __future__ import annotations

import os
import re
import time
from dataclasses import dataclass, field
from pathlib import Path

import httpx

from .errors import ProviderIOError, WeatError
from .prompting import PromptConfig, RoundPrompt
from .transcripts import DroppedFragment, ParsedRound, RawCompletion

DEFAULT_CREDENTIALS_VAR = "WEAT_LLM_KEY"


class ProviderUnreachable(ProviderIOError):
    pass


class AuthFailed(ProviderIOError):
    pass


class RateLimited(ProviderIOError):
    pass


class FixtureMissing(ProviderIOError):
    pass


class UnparseableResponse(WeatError):
    pass


@dataclass
class RetryPolicy:
    """Retry budget for transient live-call failures."""

    max_attempts: int = 3
    backoff_seconds: tuple[float, ...] = (1.0, 2.0, 4.0)

    def delay(self, attempt: int) -> float:
        """Backoff before retry number ``attempt`` (1-based)."""
        if not self.backoff_seconds:
            return 0.0
        return self.backoff_seconds[min(attempt - 1, len(self.backoff_seconds) - 1)]


@dataclass
class ProviderSpec:
    """Which backend to use and how to reach it.

    ``credentials`` names the environment variable holding the bearer key
    (the key itself never lives in config files). ``fixture_path`` is the
    per-example fixture directory for mock/replay, and the recording target
    for live calls.
    """

    kind: str = "mock"
    endpoint: str | None = None
    credentials: str = DEFAULT_CREDENTIALS_VAR
    fixture_path: str | Path | None = None
    timeout_seconds: float = 60.0
    retry_policy: RetryPolicy = field(default_factory=RetryPolicy)

    def __post_init__(self) -> None:
        if self.kind not in ("live", "mock", "replay"):
            raise ValueError(f"unknown provider kind: {self.kind}")
        if self.kind == "live" and not (self.endpoint and self.credentials):
            raise ValueError("live provider requires endpoint and credentials")
        if self.kind in ("mock", "replay") and self.fixture_path is None:
            raise ValueError(f"{self.kind} provider requires fixture_path")


def _fixture_file(provider: ProviderSpec, round_number: int) -> Path:
    assert provider.fixture_path is not None
    return Path(provider.fixture_path) / f"round-{round_number}.txt"


def _complete_from_fixture(prompt: RoundPrompt, provider: ProviderSpec) -> RawCompletion:
    path = _fixture_file(provider, prompt.round)
    if not path.is_file():
        raise FixtureMissing(f"no recorded response at {path}")
    return RawCompletion(
        round=prompt.round,
        request_digest=prompt.rendered_hash,
        response_text=path.read_text("utf-8"),
    )


def _chat_url(endpoint: str) -> str:
    if endpoint.endswith("/chat/completions"):
        return endpoint
    return endpoint.rstrip("/") + "/chat/completions"


def _complete_live(
    prompt: RoundPrompt,
    provider: ProviderSpec,
    config: PromptConfig,
    transport: httpx.BaseTransport | None,
    sleep,
) -> RawCompletion:
    key = os.environ.get(provider.credentials, "")
    if not key:
        raise AuthFailed(
            f"environment variable {provider.credentials} is not set"
        )
    payload = {
        "model": config.model_id,
        "temperature": config.temperature,
        "messages": [
            {"role": role, "content": content} for role, content in prompt.messages
        ],
    }
    headers = {"Authorization": f"Bearer {key}"}
    url = _chat_url(provider.endpoint or "")
    policy = provider.retry_policy

    started = time.monotonic()
    last_error: Exception | None = None
    with httpx.Client(timeout=provider.timeout_seconds, transport=transport) as client:
        for attempt in range(1, policy.max_attempts + 1):
            try:
                response = client.post(url, json=payload, headers=headers)
            except httpx.HTTPError as exc:
                last_error = ProviderUnreachable(f"transport failure: {exc}")
            else:
                if response.status_code in (401, 403):
                    raise AuthFailed(f"provider rejected credentials ({response.status_code})")
                if response.status_code == 429:
                    last_error = RateLimited("provider rate limit (429)")
                elif response.status_code >= 500:
                    last_error = ProviderUnreachable(
                        f"provider error {response.status_code}"
                    )
                else:
                    response.raise_for_status()
                    body = response.json()
                    usage = body.get("usage") or {}
                    raw = RawCompletion(
                        round=prompt.round,
                        request_digest=prompt.rendered_hash,
                        response_text=body["choices"][0]["message"]["content"],
                        latency_seconds=time.monotonic() - started,
                        prompt_tokens=usage.get("prompt_tokens"),
                        completion_tokens=usage.get("completion_tokens"),
                    )
                    _record(provider, raw)
                    return raw
            if attempt < policy.max_attempts:
                sleep(policy.delay(attempt))
    assert last_error is not None
    raise last_error


def _record(provider: ProviderSpec, raw: RawCompletion) -> None:
    # Live traffic is recorded for replay whenever a fixture path is set.
    if provider.fixture_path is None:
        return
    path = _fixture_file(provider, raw.round)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(raw.response_text, "utf-8")


def complete(
    prompt: RoundPrompt,
    provider: ProviderSpec,
    config: PromptConfig,
    *,
    transport: httpx.BaseTransport | None = None,
    sleep=time.sleep,
) -> RawCompletion:
    """Run one chat completion through the configured provider.

    Mock and replay lookups are fully deterministic: the response is read
    byte-exact from ``round-<r>.txt`` in the fixture directory.

    Args:
        prompt: The rendered round prompt.
        provider: Backend selection and reachability settings.
        config: Supplies model id and temperature for live calls.
        transport: Optional httpx transport override (tests).
        sleep: Backoff sleeper, injectable for tests.

    Raises:
        FixtureMissing: Mock/replay file absent.
        ProviderUnreachable: Transport or 5xx failure after retries.
        AuthFailed: Missing or rejected credentials.
        RateLimited: 429 after exhausting retries.
    """
    if provider.kind in ("mock", "replay"):
        return _complete_from_fixture(prompt, provider)
    return _complete_live(prompt, provider, config, transport, sleep)


_RECORD_RE = re.compile(r"^\s*(\d+)\s*:\s?(.*)$")

REASON_OUT_OF_RANGE = "line number out of range"
REASON_EMPTY = "empty explanation"
REASON_DUPLICATE = "superseded by a later duplicate"
REASON_UNANCHORED = "text before any numbered record"


def parse_line_explanations(raw: RawCompletion, line_count: int) -> ParsedRound:
    """Extract ``N: explanation`` records from a raw response.

    Continuation lines (non-blank, not starting a new record) fold into the
    preceding record. Records with out-of-range numbers or empty text are
    dropped with a reason; a duplicated number keeps the last occurrence and
    drops the earlier one. Every non-whitespace response line is accounted
    for in the result.

    Args:
        raw: The completion to parse.
        line_count: Number of code lines in the example (valid range 1..N).

    Raises:
        UnparseableResponse: No records at all in a non-blank response.
    """
    if line_count < 1:
        raise ValueError("line_count must be >= 1")

    records: list[tuple[int, list[str]]] = []
    unanchored: list[str] = []
    for physical in raw.response_text.split("\n"):
        match = _RECORD_RE.match(physical)
        if match:
            records.append((int(match.group(1)), [physical]))
        elif not physical.strip():
            continue
        elif records:
            records[-1][1].append(physical)
        else:
            unanchored.append(physical)

    if not records:
        if raw.response_text.strip():
            raise UnparseableResponse(
                "no 'N: explanation' records found in response"
            )
        return ParsedRound(round=raw.round)

    parsed = ParsedRound(round=raw.round)
    for fragment in unanchored:
        parsed.dropped.append(
            DroppedFragment(text=fragment, reason=REASON_UNANCHORED)
        )
    fragments_kept: dict[int, str] = {}
    for number, fragment_lines in records:
        fragment = "\n".join(fragment_lines)
        first = _RECORD_RE.match(fragment_lines[0])
        assert first is not None
        parts = [first.group(2).strip()]
        parts.extend(line.strip() for line in fragment_lines[1:])
        text = " ".join(part for part in parts if part)
        if not 1 <= number <= line_count:
            parsed.dropped.append(
                DroppedFragment(
                    text=fragment, reason=REASON_OUT_OF_RANGE, line_number=number
                )
            )
            continue
        if not text:
            parsed.dropped.append(
                DroppedFragment(
                    text=fragment, reason=REASON_EMPTY, line_number=number
                )
            )
            continue
        if number in parsed.by_line:
            parsed.dropped.append(
                DroppedFragment(
                    text=fragments_kept[number],
                    reason=REASON_DUPLICATE,
                    line_number=number,
                )
            )
        parsed.by_line[number] = text
        fragments_kept[number] = fragment
    return parsed
