"""Transcript records shared between prompting, providers, and analysis.

A generation transcript accumulates, per round, the verbatim provider
response and the per-line explanations parsed out of it.
"""

from __future__ import annotations

from dataclasses import dataclass, field


@dataclass
class RawCompletion:
    """One raw provider response, stored byte-exact."""

    round: int
    request_digest: str
    response_text: str
    latency_seconds: float = 0.0
    prompt_tokens: int | None = None
    completion_tokens: int | None = None


@dataclass
class DroppedFragment:
    """A response fragment the parser could not keep, with the reason."""

    text: str
    reason: str
    line_number: int | None = None


@dataclass
class ParsedRound:
    """Per-line explanations recovered from one round's response."""

    round: int
    by_line: dict[int, str] = field(default_factory=dict)
    dropped: list[DroppedFragment] = field(default_factory=list)


@dataclass
class GenerationTranscript:
    """Raw and parsed responses accumulated over the rounds of one example."""

    example_id: str
    completions: list[RawCompletion] = field(default_factory=list)
    parsed_rounds: list[ParsedRound] = field(default_factory=list)

    @property
    def rounds_done(self) -> int:
        return len(self.completions)

    def add_round(self, raw: RawCompletion, parsed: ParsedRound) -> None:
        """Record one completed round; rounds must arrive in order."""
        expected = self.rounds_done + 1
        if raw.round != expected or parsed.round != expected:
            raise ValueError(
                f"round {raw.round}/{parsed.round} out of order, expected {expected}"
            )
        self.completions.append(raw)
        self.parsed_rounds.append(parsed)

    def raw_responses(self) -> list[str]:
        """Verbatim response texts in round order."""
        return [completion.response_text for completion in self.completions]
