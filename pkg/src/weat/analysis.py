"""Round-to-round novelty analysis and transcript merging.

Later generation rounds tend to restate earlier ones with minor wording
changes; a bag-of-words cosine over term frequencies quantifies that, both
per round (whole-response comparison) and per line. Merging folds the
parsed rounds into leveled explanations, discarding near-duplicates, and a
lexical pass flags structural lines (closing brackets, class and main
declarations) that rarely deserve an explanation.
"""

from __future__ import annotations

import io
import math
import re
from collections import Counter
from dataclasses import dataclass, replace
from datetime import datetime

from .errors import WeatError
from .model import CodeLine, ExplanationLevel, Origin, WorkedExample, _touched
from .transcripts import ParsedRound

_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)


class RoundExampleMismatch(WeatError):
    pass


@dataclass
class MergePolicy:
    """Thresholds steering merge and early stopping.

    A new per-line text whose cosine against an existing level reaches
    ``duplicate_threshold`` is discarded as a rewording; a whole round whose
    cosine against the previous round reaches ``saturation_threshold``
    signals that further rounds are not useful. Novel text is always
    appended as the next level on its line.
    """

    duplicate_threshold: float = 0.95
    saturation_threshold: float = 0.95

    def __post_init__(self) -> None:
        if not 0.0 <= self.duplicate_threshold <= 1.0:
            raise ValueError("duplicate_threshold outside [0, 1]")
        if not 0.0 <= self.saturation_threshold <= 1.0:
            raise ValueError("saturation_threshold outside [0, 1]")


@dataclass
class SimilarityReport:
    """Cosine scores between consecutive rounds.

    ``per_round`` holds one (round, score) pair for each round r >= 2 that
    was actually compared; ``per_line`` holds the same for lines present in
    both rounds of a pair.
    """

    example_id: str
    per_round: list[tuple[int, float]]
    per_line: dict[int, list[tuple[int, float]]]


def tokenize(text: str) -> list[str]:
    """Lowercase and split on non-alphanumeric runs. No stemming."""
    return _TOKEN_RE.findall(text.lower())


def cosine_similarity(a: str, b: str) -> float:
    """Term-frequency cosine between two texts, in [0, 1].

    Two empty token bags compare as 1.0 (nothing differs); exactly one
    empty bag compares as 0.0.
    """
    counts_a = Counter(tokenize(a))
    counts_b = Counter(tokenize(b))
    if not counts_a and not counts_b:
        return 1.0
    if not counts_a or not counts_b:
        return 0.0
    dot = sum(counts_a[token] * counts_b[token] for token in counts_a if token in counts_b)
    norm_a = math.sqrt(sum(count * count for count in counts_a.values()))
    norm_b = math.sqrt(sum(count * count for count in counts_b.values()))
    return min(1.0, max(0.0, dot / (norm_a * norm_b)))


def _round_text(parsed: ParsedRound) -> str:
    return "\n".join(parsed.by_line[number] for number in sorted(parsed.by_line))


def round_similarity(
    rounds: list[ParsedRound], example_id: str = ""
) -> SimilarityReport:
    """Score each round against its predecessor.

    The per-round score compares the concatenation of the round's texts in
    line order with the previous round's concatenation; per-line scores are
    computed for lines present in both rounds.
    """
    if not rounds:
        raise ValueError("at least one parsed round is required")
    per_round: list[tuple[int, float]] = []
    per_line: dict[int, list[tuple[int, float]]] = {}
    for previous, current in zip(rounds, rounds[1:]):
        score = cosine_similarity(_round_text(current), _round_text(previous))
        per_round.append((current.round, score))
        for number in sorted(set(previous.by_line) & set(current.by_line)):
            per_line.setdefault(number, []).append(
                (current.round, cosine_similarity(current.by_line[number], previous.by_line[number]))
            )
    return SimilarityReport(
        example_id=example_id, per_round=per_round, per_line=per_line
    )


def similarity_report_csv(
    report: SimilarityReport, planned_rounds: int | None = None
) -> str:
    """Render per-round scores as CSV with columns (example, round, score).

    Rounds that never ran (when ``planned_rounds`` exceeds the computed
    pairs) get an explicit ``--`` score cell; nothing distinguishes "round
    not run" from "no text produced", and both render the same marker.
    """
    buffer = io.StringIO()
    buffer.write("example,round,score\n")
    computed = dict(report.per_round)
    last = max(computed, default=1)
    top = max(last, planned_rounds or 0)
    for round_number in range(2, top + 1):
        if round_number in computed:
            buffer.write(
                f"{report.example_id},{round_number},{computed[round_number]:.6f}\n"
            )
        else:
            buffer.write(f"{report.example_id},{round_number},--\n")
    return buffer.getvalue()


def merge_rounds(
    example: WorkedExample,
    rounds: list[ParsedRound],
    policy: MergePolicy | None = None,
    *,
    now: datetime | None = None,
) -> WorkedExample:
    """Fold parsed rounds into leveled explanations on the example.

    The first text a line receives becomes level 1 regardless of which
    round produced it; later texts are appended as the next level unless
    their cosine against one of the line's existing levels reaches the
    duplicate threshold. Re-merging the same rounds changes nothing.

    Raises:
        RoundExampleMismatch: A parsed line number outside the example.
    """
    policy = policy or MergePolicy()
    line_count = len(example.lines)
    for parsed in rounds:
        bad = [number for number in parsed.by_line if not 1 <= number <= line_count]
        if bad:
            raise RoundExampleMismatch(
                f"round {parsed.round} explains lines {bad} outside 1..{line_count}"
            )

    lines: list[CodeLine] = [
        CodeLine(
            number=line.number,
            text=line.text,
            explanations=list(line.explanations),
            challenge=line.challenge,
            structural=line.structural,
        )
        for line in example.lines
    ]
    changed = False
    for parsed in rounds:
        for number in sorted(parsed.by_line):
            text = parsed.by_line[number]
            target = lines[number - 1]
            if any(
                cosine_similarity(text, level.text) >= policy.duplicate_threshold
                for level in target.explanations
            ):
                continue
            target.explanations.append(
                ExplanationLevel(
                    level=len(target.explanations) + 1,
                    text=text,
                    origin=Origin.GENERATED,
                    source_round=parsed.round,
                )
            )
            changed = True
    if not changed:
        return example
    return replace(example, lines=lines, updated_at=_touched(example, now))


_CLOSERS_RE = re.compile(r"[})\];]+")
_CLASS_RE = re.compile(r"^(?:\w+\s+)*class\s+\w+")
_MAIN_RE = re.compile(r"\bstatic\b[^=]*\bmain\s*\(")


def _contains_assignment(text: str) -> bool:
    for index, char in enumerate(text):
        if char != "=":
            continue
        before = text[index - 1] if index > 0 else ""
        after = text[index + 1] if index + 1 < len(text) else ""
        if after == "=" or before in "=!<>":
            continue
        return True
    return False


def flag_structural_lines(example: WorkedExample) -> set[int]:
    """Flag lines that usually need no explanation.

    Matches lines that are nothing but closing brackets/semicolons, class
    declarations, and main-method signatures, all lexically; lines holding
    an assignment are never flagged. Sets ``structural`` on the example's
    lines in place and returns the flagged numbers. Advisory only: existing
    explanations are never touched.
    """
    flagged: set[int] = set()
    for line in example.lines:
        stripped = line.text.strip()
        structural = False
        if stripped and not _contains_assignment(stripped):
            if _CLOSERS_RE.fullmatch(stripped):
                structural = True
            elif _CLASS_RE.search(stripped) or _MAIN_RE.search(stripped):
                structural = True
        line.structural = structural
        if structural:
            flagged.add(line.number)
    return flagged
