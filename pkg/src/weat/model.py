"""Data model for worked examples.

A worked example is a solved programming problem: a problem statement plus
source code whose lines carry ordered, multi-level explanations. Lines can
additionally be marked as challenges (blanked out for the student, who picks
among distractor snippets).

Operations are copy-on-write: they return updated examples and never mutate
their inputs, so values can be handed freely between threads. Construction
via the dataclasses is unchecked on purpose (deserialized or hand-built
instances may be broken); :func:`validate` reports every invariant violation
as data.
"""

from __future__ import annotations

import uuid
from dataclasses import dataclass, field, replace
from datetime import datetime, timedelta, timezone
from enum import Enum

from .errors import WeatError


class Origin(str, Enum):
    """Provenance of one explanation level."""

    GENERATED = "generated"
    EDITED = "edited"
    HUMAN = "human-authored"


@dataclass
class ExplanationLevel:
    """One level of detail for a line explanation (level 1 = briefest)."""

    level: int
    text: str
    origin: Origin = Origin.HUMAN
    source_round: int | None = None


@dataclass
class ChallengeSpec:
    """Marks a line as blankable, offering distractor snippets instead."""

    distractors: list[str]
    prompt_hint: str | None = None


@dataclass
class CodeLine:
    """A single numbered source line with its attached explanations.

    ``structural`` is an advisory flag (closing braces, class/main
    declarations) set by the round-analysis pass; it never affects content.
    A challenged line keeps its true text: blanking is presentation-side.
    """

    number: int
    text: str
    explanations: list[ExplanationLevel] = field(default_factory=list)
    challenge: ChallengeSpec | None = None
    structural: bool = False


@dataclass
class WorkedExample:
    """A worked example: metadata plus ordered, explained code lines."""

    id: str
    title: str
    description: str
    language_tag: str
    lines: list[CodeLine]
    created_at: datetime
    updated_at: datetime
    extras: dict = field(default_factory=dict)

    @property
    def line_count(self) -> int:
        return len(self.lines)

    def line(self, number: int) -> CodeLine:
        """Return the line with the given 1-based number.

        Raises:
            LineOutOfRange: If ``number`` is not in [1, N].
        """
        if not 1 <= number <= len(self.lines):
            raise LineOutOfRange(
                f"line {number} out of range 1..{len(self.lines)}"
            )
        return self.lines[number - 1]

    def source(self) -> str:
        """Reassemble the raw source by joining line texts with newlines."""
        return "\n".join(line.text for line in self.lines)


@dataclass
class Violation:
    """One invariant violation found by :func:`validate`."""

    message: str
    line_number: int | None = None

    def __str__(self) -> str:
        if self.line_number is None:
            return self.message
        return f"line {self.line_number}: {self.message}"


class EmptyTitle(WeatError):
    pass


class EmptySource(WeatError):
    pass


class LineOutOfRange(WeatError):
    pass


class EmptyExplanation(WeatError):
    pass


class NoDistractors(WeatError):
    pass


class DistractorEqualsTruth(WeatError):
    pass


def _utcnow() -> datetime:
    return datetime.now(timezone.utc)


def _copy_line(line: CodeLine) -> CodeLine:
    return CodeLine(
        number=line.number,
        text=line.text,
        explanations=list(line.explanations),
        challenge=line.challenge,
        structural=line.structural,
    )


def _touched(example: WorkedExample, now: datetime | None) -> datetime:
    # Strictly advance updated_at even under a coarse or frozen clock.
    stamp = now if now is not None else _utcnow()
    if stamp <= example.updated_at:
        stamp = example.updated_at + timedelta(microseconds=1)
    return stamp


def create_example(
    title: str,
    description: str,
    source: str,
    language_tag: str = "java",
    *,
    example_id: str | None = None,
    now: datetime | None = None,
) -> WorkedExample:
    """Create a worked example from raw source text.

    The source is split on newlines into lines numbered from 1; blank and
    comment-only lines are numbered too, so later line references stay
    aligned with the raw file. A single trailing newline is trimmed (file
    convention); everything else round-trips verbatim, tabs included.

    Args:
        title: Non-empty example title.
        description: Problem statement; may be empty.
        source: Program source; must contain visible content.
        language_tag: Language label, e.g. ``"java"``.
        example_id: Explicit identifier; defaults to a fresh UUID hex.
        now: Timestamp override for deterministic pipelines.

    Raises:
        EmptyTitle: If the title is blank.
        EmptySource: If the source is blank.
    """
    if not title.strip():
        raise EmptyTitle("title must be non-empty")
    trimmed = source.removesuffix("\n")
    if not trimmed.strip():
        raise EmptySource("source must contain at least one non-blank line")
    stamp = now if now is not None else _utcnow()
    lines = [
        CodeLine(number=i, text=text)
        for i, text in enumerate(trimmed.split("\n"), start=1)
    ]
    return WorkedExample(
        id=example_id if example_id is not None else uuid.uuid4().hex,
        title=title,
        description=description,
        language_tag=language_tag,
        lines=lines,
        created_at=stamp,
        updated_at=stamp,
    )


def attach_explanation(
    example: WorkedExample,
    line: int,
    level_text: str,
    origin: Origin = Origin.HUMAN,
    source_round: int | None = None,
    *,
    now: datetime | None = None,
) -> WorkedExample:
    """Append ``level_text`` as the next explanation level on a line.

    Existing levels are never renumbered; the new level is k+1 where k is
    the current level count.

    Raises:
        LineOutOfRange: If ``line`` is not in [1, N].
        EmptyExplanation: If ``level_text`` is blank.
    """
    if not 1 <= line <= len(example.lines):
        raise LineOutOfRange(f"line {line} out of range 1..{len(example.lines)}")
    if not level_text.strip():
        raise EmptyExplanation("explanation text must be non-empty")
    lines = [_copy_line(entry) for entry in example.lines]
    target = lines[line - 1]
    target.explanations.append(
        ExplanationLevel(
            level=len(target.explanations) + 1,
            text=level_text,
            origin=origin,
            source_round=source_round,
        )
    )
    return replace(example, lines=lines, updated_at=_touched(example, now))


def edit_explanation(
    example: WorkedExample,
    line: int,
    level: int,
    new_text: str,
    *,
    now: datetime | None = None,
) -> WorkedExample:
    """Replace the text of an existing level.

    A generated level flips to ``edited`` but keeps its source round for
    provenance; human-authored text stays human-authored.

    Raises:
        LineOutOfRange: If the line or level does not exist.
        EmptyExplanation: If ``new_text`` is blank.
    """
    if not 1 <= line <= len(example.lines):
        raise LineOutOfRange(f"line {line} out of range 1..{len(example.lines)}")
    if not new_text.strip():
        raise EmptyExplanation("explanation text must be non-empty")
    lines = [_copy_line(entry) for entry in example.lines]
    target = lines[line - 1]
    if not 1 <= level <= len(target.explanations):
        raise LineOutOfRange(
            f"line {line} has no explanation level {level}"
        )
    old = target.explanations[level - 1]
    origin = Origin.EDITED if old.origin is Origin.GENERATED else old.origin
    target.explanations[level - 1] = ExplanationLevel(
        level=old.level,
        text=new_text,
        origin=origin,
        source_round=old.source_round,
    )
    return replace(example, lines=lines, updated_at=_touched(example, now))


def mark_challenge(
    example: WorkedExample,
    line: int,
    distractors: list[str],
    prompt_hint: str | None = None,
    *,
    now: datetime | None = None,
) -> WorkedExample:
    """Turn a line into a challenge with the given distractor snippets.

    Raises:
        LineOutOfRange: If ``line`` is not in [1, N].
        NoDistractors: If the distractor list is empty.
        DistractorEqualsTruth: If any distractor equals the true line text.
    """
    if not 1 <= line <= len(example.lines):
        raise LineOutOfRange(f"line {line} out of range 1..{len(example.lines)}")
    if not distractors:
        raise NoDistractors("a challenge needs at least one distractor")
    truth = example.lines[line - 1].text
    for snippet in distractors:
        if snippet == truth:
            raise DistractorEqualsTruth(
                f"distractor equals the true text of line {line}"
            )
    lines = [_copy_line(entry) for entry in example.lines]
    lines[line - 1].challenge = ChallengeSpec(
        distractors=list(distractors), prompt_hint=prompt_hint
    )
    return replace(example, lines=lines, updated_at=_touched(example, now))


def validate(example: WorkedExample) -> list[Violation]:
    """Report every invariant violation in the example.

    Pure and side-effect free; an empty report means the example is valid.
    """
    violations: list[Violation] = []
    if not example.title.strip():
        violations.append(Violation("title is empty"))
    seen: set[int] = set()
    for position, line in enumerate(example.lines, start=1):
        if line.number != position:
            violations.append(
                Violation(
                    f"expected line number {position}, found {line.number}",
                    line_number=line.number,
                )
            )
        if line.number in seen:
            violations.append(
                Violation(
                    f"duplicate line number {line.number}",
                    line_number=line.number,
                )
            )
        seen.add(line.number)
        for idx, expl in enumerate(line.explanations, start=1):
            if expl.level != idx:
                violations.append(
                    Violation(
                        f"expected explanation level {idx}, found {expl.level}",
                        line_number=line.number,
                    )
                )
            if not expl.text.strip():
                violations.append(
                    Violation(
                        f"explanation level {expl.level} is empty",
                        line_number=line.number,
                    )
                )
            if expl.origin is Origin.GENERATED and expl.source_round is None:
                violations.append(
                    Violation(
                        f"generated level {expl.level} lacks a source round",
                        line_number=line.number,
                    )
                )
        if line.challenge is not None:
            if not line.challenge.distractors:
                violations.append(
                    Violation("challenge has no distractors", line_number=line.number)
                )
            for snippet in line.challenge.distractors:
                if snippet == line.text:
                    violations.append(
                        Violation(
                            "challenge distractor equals the true line text",
                            line_number=line.number,
                        )
                    )
    return violations
