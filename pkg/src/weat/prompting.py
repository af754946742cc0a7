"""Deterministic construction of the iterative explanation prompt.

Round 1 asks for line-by-line explanations of the numbered source (with the
problem description when configured); every later round replays the prior
responses as assistant turns and asks for explanations that are new. The
prompt text lives in ``templates/`` as data, overridable per slot, so the
same inputs always render to the same bytes.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from importlib import resources

from .errors import WeatError
from .model import EmptySource, WorkedExample
from .transcripts import GenerationTranscript

TEMPLATE_SLOTS = ("preamble", "format-contract", "new-round-directive")

_SLOT_FILES = {
    "preamble": "preamble.txt",
    "format-contract": "format_contract.txt",
    "new-round-directive": "new_round_directive.txt",
}


class RoundLimitExceeded(WeatError):
    pass


@dataclass
class PromptConfig:
    """Settings for one generation run.

    ``template_overrides`` replaces the text of a named slot (one of
    ``preamble``, ``format-contract``, ``new-round-directive``) for this run
    only; the shipped template files are never touched.
    """

    model_id: str = "gpt-3.5-turbo-16k"
    temperature: float = 0.0
    max_rounds: int = 2
    include_description: bool = True
    role_name: str = "professor"
    template_overrides: dict[str, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not 0.0 <= self.temperature <= 2.0:
            raise ValueError(f"temperature {self.temperature} outside [0, 2]")
        if self.max_rounds < 1:
            raise ValueError("max_rounds must be >= 1")
        unknown = set(self.template_overrides) - set(TEMPLATE_SLOTS)
        if unknown:
            raise ValueError(f"unknown template slots: {sorted(unknown)}")


@dataclass
class RoundPrompt:
    """A fully rendered prompt for one round.

    ``messages`` is the ordered (role, content) chat sequence; round 1 has
    no assistant turns, round r > 1 embeds all prior raw responses in order.
    ``rendered_hash`` digests the full rendering for golden tests.
    """

    round: int
    messages: list[tuple[str, str]]
    rendered_hash: str

    def rendered_text(self) -> str:
        """The whole prompt as one text block (role-labelled)."""
        return "\n".join(f"[{role}]\n{content}" for role, content in self.messages)


def default_config() -> PromptConfig:
    """The adopted generation settings.

    Deterministic decoding (temperature 0), two rounds, and the problem
    description included in the prompt.
    """
    return PromptConfig()


def load_template(slot: str) -> str:
    """Read the shipped template text for a slot name."""
    try:
        filename = _SLOT_FILES[slot]
    except KeyError:
        raise ValueError(f"unknown template slot: {slot}") from None
    return (
        resources.files("weat.templates").joinpath(filename).read_text("utf-8")
    )


def template_text(slot: str, config: PromptConfig) -> str:
    """Template text for a slot, honoring per-run overrides."""
    override = config.template_overrides.get(slot)
    return override if override is not None else load_template(slot)


def number_lines(source: str) -> str:
    """Prefix each physical line with ``N: ``, numbering from 1.

    Blank lines are numbered too, and the original text is unchanged after
    the prefix. A single trailing newline is trimmed first.

    Raises:
        EmptySource: If the source is blank.
    """
    trimmed = source.removesuffix("\n")
    if not trimmed.strip():
        raise EmptySource("cannot number a blank source")
    return "\n".join(
        f"{i}: {text}" for i, text in enumerate(trimmed.split("\n"), start=1)
    )


def _digest(messages: list[tuple[str, str]]) -> str:
    hasher = hashlib.sha256()
    for role, content in messages:
        hasher.update(role.encode("utf-8"))
        hasher.update(b"\x00")
        hasher.update(content.encode("utf-8"))
        hasher.update(b"\x00")
    return hasher.hexdigest()


def build_round_prompt(
    example: WorkedExample,
    config: PromptConfig,
    transcript: GenerationTranscript | None = None,
) -> RoundPrompt:
    """Render the prompt for the next round of the transcript.

    The system turn assigns the configured role. The round-1 user turn
    carries the problem description (when configured and non-empty), the
    line-numbered source, and the output-format contract. Later rounds
    replay each prior raw response as an assistant turn and ask for
    explanations that are new. Rendering is a pure function of its inputs.

    Raises:
        RoundLimitExceeded: If the transcript already has max_rounds rounds.
        EmptySource: If the example has no source text.
    """
    prior = transcript.raw_responses() if transcript is not None else []
    round_number = len(prior) + 1
    if round_number > config.max_rounds:
        raise RoundLimitExceeded(
            f"round {round_number} exceeds max_rounds {config.max_rounds}"
        )

    system_text = template_text("preamble", config).replace(
        "{{role_name}}", config.role_name
    )

    blocks: list[str] = []
    if config.include_description and example.description.strip():
        blocks.append(f"Problem description:\n{example.description.strip()}")
    blocks.append(
        "Here is the program, with each line prefixed by its line number:\n\n"
        + number_lines(example.source())
    )
    blocks.append(template_text("format-contract", config).rstrip("\n"))
    first_user = "\n\n".join(blocks)

    messages: list[tuple[str, str]] = [
        ("system", system_text.rstrip("\n")),
        ("user", first_user),
    ]
    directive = template_text("new-round-directive", config).rstrip("\n")
    for response in prior:
        messages.append(("assistant", response))
        messages.append(("user", directive))

    return RoundPrompt(
        round=round_number, messages=messages, rendered_hash=_digest(messages)
    )
