"""Rating records and CSV ingestion.

External study ratings arrive as CSV with the header
``evaluator_id,group,example_id,line,completeness_a,completeness_b,preference``;
internal (prompt-tuning) ratings as
``rater_id,example_id,line,round,correct,relevant,hallucination,additional_info``
with empty cells for flags that do not apply. Ingestion is transactional:
any bad row rejects the whole file.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from pathlib import Path

from ..errors import WeatError

GROUPS = ("students", "authors")
SCALE = (0, 1, 2)

EXTERNAL_HEADER = [
    "evaluator_id",
    "group",
    "example_id",
    "line",
    "completeness_a",
    "completeness_b",
    "preference",
]

INTERNAL_HEADER = [
    "rater_id",
    "example_id",
    "line",
    "round",
    "correct",
    "relevant",
    "hallucination",
    "additional_info",
]


class RatingIngestError(WeatError):
    pass


@dataclass
class RatingRecord:
    """One evaluator's external judgment of one blinded line."""

    evaluator_id: str
    evaluator_group: str
    example_id: str
    line_number: int
    completeness_a: int
    completeness_b: int
    preference: int

    def __post_init__(self) -> None:
        if self.evaluator_group not in GROUPS:
            raise ValueError(
                f"evaluator_group must be one of {GROUPS}, got {self.evaluator_group!r}"
            )
        for name in ("completeness_a", "completeness_b", "preference"):
            value = getattr(self, name)
            if value not in SCALE:
                raise ValueError(f"{name} must be in {SCALE}, got {value!r}")


@dataclass
class InternalRating:
    """One internal rater's judgment of one generated line explanation.

    Exactly one of ``relevant`` (description present in the prompt) and
    ``hallucination`` (description absent) must be set; the populated field
    identifies the condition. ``additional_info`` applies to rounds >= 2.
    """

    rater_id: str
    example_id: str
    line_number: int
    round: int
    correct: bool
    relevant: bool | None = None
    hallucination: bool | None = None
    additional_info: bool | None = None

    def __post_init__(self) -> None:
        if self.round < 1:
            raise ValueError("round must be >= 1")
        if (self.relevant is None) == (self.hallucination is None):
            raise ValueError(
                "exactly one of relevant/hallucination must be set "
                "(it identifies the description condition)"
            )
        if self.additional_info is not None and self.round < 2:
            raise ValueError("additional_info applies to rounds >= 2 only")

    @property
    def condition(self) -> str:
        return "description_present" if self.relevant is not None else "description_absent"


def _parse_bool(cell: str) -> bool | None:
    text = cell.strip().lower()
    if text == "":
        return None
    if text in ("1", "true", "yes", "y"):
        return True
    if text in ("0", "false", "no", "n"):
        return False
    raise ValueError(f"not a boolean cell: {cell!r}")


def _read_rows(text: str, expected_header: list[str], source: str) -> list[dict]:
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise RatingIngestError(f"{source}: empty ratings file") from None
    if [cell.strip() for cell in header] != expected_header:
        raise RatingIngestError(
            f"{source}: expected header {','.join(expected_header)}"
        )
    rows = []
    for line_index, row in enumerate(reader, start=2):
        if not row or all(not cell.strip() for cell in row):
            continue
        if len(row) != len(expected_header):
            raise RatingIngestError(
                f"{source}: row {line_index} has {len(row)} cells, "
                f"expected {len(expected_header)}"
            )
        rows.append(
            {"_row": line_index, **dict(zip(expected_header, row))}
        )
    return rows


def parse_ratings_csv(text: str, source: str = "<ratings>") -> list[RatingRecord]:
    """Parse external ratings CSV; all rows or none."""
    records = []
    for row in _read_rows(text, EXTERNAL_HEADER, source):
        try:
            records.append(
                RatingRecord(
                    evaluator_id=row["evaluator_id"].strip(),
                    evaluator_group=row["group"].strip(),
                    example_id=row["example_id"].strip(),
                    line_number=int(row["line"]),
                    completeness_a=int(row["completeness_a"]),
                    completeness_b=int(row["completeness_b"]),
                    preference=int(row["preference"]),
                )
            )
        except ValueError as exc:
            raise RatingIngestError(f"{source}: row {row['_row']}: {exc}") from exc
    return records


def parse_internal_csv(text: str, source: str = "<ratings>") -> list[InternalRating]:
    """Parse internal ratings CSV; all rows or none."""
    records = []
    for row in _read_rows(text, INTERNAL_HEADER, source):
        try:
            correct = _parse_bool(row["correct"])
            if correct is None:
                raise ValueError("correct cell must not be empty")
            records.append(
                InternalRating(
                    rater_id=row["rater_id"].strip(),
                    example_id=row["example_id"].strip(),
                    line_number=int(row["line"]),
                    round=int(row["round"]),
                    correct=correct,
                    relevant=_parse_bool(row["relevant"]),
                    hallucination=_parse_bool(row["hallucination"]),
                    additional_info=_parse_bool(row["additional_info"]),
                )
            )
        except ValueError as exc:
            raise RatingIngestError(f"{source}: row {row['_row']}: {exc}") from exc
    return records


def load_ratings_csv(path: str | Path) -> list[RatingRecord]:
    path = Path(path)
    return parse_ratings_csv(path.read_text("utf-8"), source=str(path))


def load_internal_csv(path: str | Path) -> list[InternalRating]:
    path = Path(path)
    return parse_internal_csv(path.read_text("utf-8"), source=str(path))
