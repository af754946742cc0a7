"""Blind pairwise comparison sheets.

For every code line that has both a generated and an expert explanation,
evaluators see the two texts as anonymous slots A and B and rate each for
completeness plus which is better. Slot order is randomized per line from a
seed, balanced to within one of 50/50 across the whole corpus, and shared
by all evaluators; the slot-to-source key is kept out of everything an
evaluator is shown.
"""

from __future__ import annotations

import csv
import io
import json
import random
from dataclasses import dataclass, field
from typing import Sequence

from ..errors import WeatError
from ..model import Origin, WorkedExample

GENERATED = "generated"
EXPERT = "expert"

COMPLETENESS_SCALE = "Not complete (0), Complete (1), Very complete (2)"
PREFERENCE_SCALE = (
    "Both are the same (0), Explanation A is better (1), Explanation B is better (2)"
)


class NoComparableLines(WeatError):
    pass


@dataclass
class SheetItem:
    """One blinded line: two explanation slots plus the hidden source map."""

    example_id: str
    line_number: int
    slot_a: str
    slot_b: str
    assignment: dict[str, str]


@dataclass
class ComparisonSheet:
    """Everything one evaluator rates, in presentation order."""

    sheet_id: str
    evaluator_id: str
    seed: int
    items: list[SheetItem] = field(default_factory=list)


def filter_comparable(
    lines: Sequence[tuple],
) -> tuple[list[tuple], int, int]:
    """Split lines into comparable and one-sided.

    Args:
        lines: Tuples ``(key, generated_text_or_None, expert_text_or_None)``.

    Returns:
        ``(comparable, generated_only_count, expert_only_count)`` where
        comparable keeps only lines carrying both texts. Lines with neither
        text are silently discarded.
    """
    comparable = []
    generated_only = 0
    expert_only = 0
    for key, generated, expert in lines:
        if generated and expert:
            comparable.append((key, generated, expert))
        elif generated:
            generated_only += 1
        elif expert:
            expert_only += 1
    return comparable, generated_only, expert_only


def line_side_texts(
    example: WorkedExample, *, levels: str = "all"
) -> list[tuple[tuple[str, int], str | None, str | None]]:
    """Per-line (generated, expert) explanation texts for one example.

    Generated-side text joins the ``generated``/``edited`` levels, expert
    side the ``human-authored`` levels, each separated by a blank line; with
    ``levels="first"`` only the first level of each side is used. Lines with
    no explanations at all are omitted.
    """
    if levels not in ("all", "first"):
        raise ValueError("levels must be 'all' or 'first'")
    rows: list[tuple[tuple[str, int], str | None, str | None]] = []
    for line in example.lines:
        generated = [
            level.text
            for level in line.explanations
            if level.origin in (Origin.GENERATED, Origin.EDITED)
        ]
        expert = [
            level.text for level in line.explanations if level.origin is Origin.HUMAN
        ]
        if levels == "first":
            generated = generated[:1]
            expert = expert[:1]
        if not generated and not expert:
            continue
        rows.append(
            (
                (example.id, line.number),
                "\n\n".join(generated) if generated else None,
                "\n\n".join(expert) if expert else None,
            )
        )
    return rows


def build_sheets(
    examples: Sequence[WorkedExample],
    evaluators: Sequence[str],
    seed: int,
    *,
    levels: str = "all",
) -> list[ComparisonSheet]:
    """Build one blinded sheet per evaluator over all comparable lines.

    The slot assignment is drawn once for the corpus (every evaluator sees
    the same slot order for a given line, mirroring a single randomized
    form): a half-and-half assignment vector, balanced to within one line,
    shuffled by ``random.Random(seed)``. Bit-reproducible given the same
    inputs and seed.

    Raises:
        NoComparableLines: No line carries both a generated and an expert
            explanation.
    """
    rows: list[tuple[tuple[str, int], str | None, str | None]] = []
    for example in examples:
        rows.extend(line_side_texts(example, levels=levels))
    comparable, _, _ = filter_comparable(rows)
    if not comparable:
        raise NoComparableLines("no line has both generated and expert explanations")

    rng = random.Random(seed)
    count = len(comparable)
    n_generated_first = count // 2 + (rng.randrange(2) if count % 2 else 0)
    generated_first = [index < n_generated_first for index in range(count)]
    rng.shuffle(generated_first)

    items: list[SheetItem] = []
    for (key, generated, expert), a_is_generated in zip(comparable, generated_first):
        example_id, line_number = key
        if a_is_generated:
            slot_a, slot_b = generated, expert
            assignment = {"A": GENERATED, "B": EXPERT}
        else:
            slot_a, slot_b = expert, generated
            assignment = {"A": EXPERT, "B": GENERATED}
        items.append(
            SheetItem(
                example_id=example_id,
                line_number=line_number,
                slot_a=slot_a,
                slot_b=slot_b,
                assignment=dict(assignment),
            )
        )

    sheets = []
    for position, evaluator_id in enumerate(evaluators, start=1):
        sheets.append(
            ComparisonSheet(
                sheet_id=f"sheet-{position:02d}",
                evaluator_id=str(evaluator_id),
                seed=seed,
                items=[
                    SheetItem(
                        example_id=item.example_id,
                        line_number=item.line_number,
                        slot_a=item.slot_a,
                        slot_b=item.slot_b,
                        assignment=dict(item.assignment),
                    )
                    for item in items
                ],
            )
        )
    return sheets


def render_sheet_markdown(sheet: ComparisonSheet) -> str:
    """Blinded Markdown rendering of one sheet (no source identities)."""
    buffer = io.StringIO()
    buffer.write(f"# Evaluation sheet {sheet.sheet_id}\n\n")
    buffer.write(f"Evaluator: {sheet.evaluator_id}\n\n")
    buffer.write(
        "For each line, rate how complete each explanation is "
        f"({COMPLETENESS_SCALE}) and which explanation is better "
        f"({PREFERENCE_SCALE}).\n\n"
    )
    for item in sheet.items:
        buffer.write(f"## {item.example_id}, line {item.line_number}\n\n")
        buffer.write(f"Explanation A:\n\n{item.slot_a}\n\n")
        buffer.write(f"Explanation B:\n\n{item.slot_b}\n\n")
    return buffer.getvalue()


def render_sheet_csv(sheet: ComparisonSheet) -> str:
    """Blinded CSV rendering of one sheet (no source identities)."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(
        ["sheet_id", "evaluator_id", "example_id", "line", "explanation_a", "explanation_b"]
    )
    for item in sheet.items:
        writer.writerow(
            [
                sheet.sheet_id,
                sheet.evaluator_id,
                item.example_id,
                item.line_number,
                item.slot_a,
                item.slot_b,
            ]
        )
    return buffer.getvalue()


def sheets_to_key_json(sheets: Sequence[ComparisonSheet]) -> str:
    """Serialize sheets including the hidden assignments (the study key)."""
    payload = {
        "sheets": [
            {
                "sheet_id": sheet.sheet_id,
                "evaluator_id": sheet.evaluator_id,
                "seed": sheet.seed,
                "items": [
                    {
                        "example_id": item.example_id,
                        "line_number": item.line_number,
                        "slot_a": item.slot_a,
                        "slot_b": item.slot_b,
                        "assignment": item.assignment,
                    }
                    for item in sheet.items
                ],
            }
            for sheet in sheets
        ]
    }
    return json.dumps(payload, indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def sheets_from_key_json(document: str) -> list[ComparisonSheet]:
    """Parse the study key back into sheet objects."""
    payload = json.loads(document)
    return [
        ComparisonSheet(
            sheet_id=entry["sheet_id"],
            evaluator_id=entry["evaluator_id"],
            seed=entry["seed"],
            items=[
                SheetItem(
                    example_id=item["example_id"],
                    line_number=item["line_number"],
                    slot_a=item["slot_a"],
                    slot_b=item["slot_b"],
                    assignment=dict(item["assignment"]),
                )
                for item in entry["items"]
            ],
        )
        for entry in payload["sheets"]
    ]
