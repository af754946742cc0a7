"""Import and export of worked examples.

Two document flavors, both deterministic JSON (UTF-8, LF, two-space indent,
sorted keys, byte-stable across re-serialization):

* portable (``*.weat.json``): the full model including provenance (origin,
  source round), structural flags, and challenges; round-trips exactly.
* PCEX-style (``*.pcex.json``): the content model consumed by
  example-exploration systems: title, description, code lines with ordered
  explanation texts, and inline challenges. Toolkit-internal provenance is
  dropped.

Unknown top-level fields in a portable document are preserved opaquely and
re-emitted on export; unknown nested fields are not retained.
"""

from __future__ import annotations

import json
from datetime import datetime, timezone

from .errors import WeatError
from .model import (
    ChallengeSpec,
    CodeLine,
    ExplanationLevel,
    Origin,
    WorkedExample,
    validate,
)

PORTABLE_SCHEMA_VERSION = "1"
PCEX_SCHEMA_VERSION = "1"

_REQUIRED_FIELDS = (
    "schema_version",
    "id",
    "title",
    "description",
    "language_tag",
    "created_at",
    "updated_at",
    "lines",
)


class InvalidExample(WeatError):
    pass


class SchemaViolation(WeatError):
    pass


class UnsupportedVersion(WeatError):
    pass


def _format_ts(stamp: datetime) -> str:
    if stamp.tzinfo is None:
        stamp = stamp.replace(tzinfo=timezone.utc)
    return (
        stamp.astimezone(timezone.utc)
        .isoformat(timespec="microseconds")
        .replace("+00:00", "Z")
    )


def _parse_ts(text: str) -> datetime:
    return datetime.fromisoformat(text.replace("Z", "+00:00"))


def _dump(document: dict) -> str:
    return json.dumps(document, indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def _require_valid(example: WorkedExample) -> None:
    violations = validate(example)
    if violations:
        details = "; ".join(str(violation) for violation in violations)
        raise InvalidExample(f"example {example.id} is invalid: {details}")


def export_portable(example: WorkedExample) -> str:
    """Serialize a valid example to the portable document format.

    Raises:
        InvalidExample: If :func:`weat.model.validate` reports violations.
    """
    _require_valid(example)
    document: dict = dict(example.extras)
    document.update(
        {
            "schema_version": PORTABLE_SCHEMA_VERSION,
            "id": example.id,
            "title": example.title,
            "description": example.description,
            "language_tag": example.language_tag,
            "created_at": _format_ts(example.created_at),
            "updated_at": _format_ts(example.updated_at),
            "lines": [
                {
                    "number": line.number,
                    "text": line.text,
                    "structural": line.structural,
                    "explanations": [
                        {
                            "level": level.level,
                            "text": level.text,
                            "origin": level.origin.value,
                            "source_round": level.source_round,
                        }
                        for level in line.explanations
                    ],
                    "challenge": None
                    if line.challenge is None
                    else {
                        "distractors": list(line.challenge.distractors),
                        "prompt_hint": line.challenge.prompt_hint,
                    },
                }
                for line in example.lines
            ],
        }
    )
    return _dump(document)


def import_portable(document: str) -> WorkedExample:
    """Parse a portable document back into a validated example.

    Raises:
        SchemaViolation: Malformed JSON, missing fields, or a parsed example
            that fails validation (bad numbering, empty texts, ...).
        UnsupportedVersion: A schema_version this toolkit does not know.
    """
    try:
        payload = json.loads(document)
    except json.JSONDecodeError as exc:
        raise SchemaViolation(f"not valid JSON: {exc}") from exc
    if not isinstance(payload, dict):
        raise SchemaViolation("document root must be an object")
    if "schema_version" not in payload:
        raise SchemaViolation("missing required field: schema_version")
    if payload["schema_version"] != PORTABLE_SCHEMA_VERSION:
        raise UnsupportedVersion(
            f"schema_version {payload['schema_version']!r} is not supported"
        )
    missing = [name for name in _REQUIRED_FIELDS if name not in payload]
    if missing:
        raise SchemaViolation(f"missing required fields: {', '.join(missing)}")

    try:
        lines = []
        for entry in payload["lines"]:
            challenge = entry.get("challenge")
            lines.append(
                CodeLine(
                    number=int(entry["number"]),
                    text=str(entry["text"]),
                    structural=bool(entry.get("structural", False)),
                    explanations=[
                        ExplanationLevel(
                            level=int(expl["level"]),
                            text=str(expl["text"]),
                            origin=Origin(expl["origin"]),
                            source_round=expl.get("source_round"),
                        )
                        for expl in entry.get("explanations", [])
                    ],
                    challenge=None
                    if challenge is None
                    else ChallengeSpec(
                        distractors=[str(d) for d in challenge["distractors"]],
                        prompt_hint=challenge.get("prompt_hint"),
                    ),
                )
            )
        example = WorkedExample(
            id=str(payload["id"]),
            title=str(payload["title"]),
            description=str(payload["description"]),
            language_tag=str(payload["language_tag"]),
            created_at=_parse_ts(payload["created_at"]),
            updated_at=_parse_ts(payload["updated_at"]),
            lines=lines,
            extras={
                key: value
                for key, value in payload.items()
                if key not in _REQUIRED_FIELDS
            },
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaViolation(f"malformed document field: {exc}") from exc

    violations = validate(example)
    if violations:
        details = "; ".join(str(violation) for violation in violations)
        raise SchemaViolation(f"document violates example invariants: {details}")
    return example


def export_pcex(example: WorkedExample) -> str:
    """Serialize a valid example to the PCEX-style content document.

    Explanation levels are emitted as an ordered list of texts; provenance
    and structural flags stay internal. Lines without a challenge carry no
    challenge key at all.

    Raises:
        InvalidExample: If :func:`weat.model.validate` reports violations.
    """
    _require_valid(example)
    lines = []
    for line in example.lines:
        entry: dict = {
            "number": line.number,
            "text": line.text,
            "explanations": [level.text for level in line.explanations],
        }
        if line.challenge is not None:
            challenge: dict = {"distractors": list(line.challenge.distractors)}
            if line.challenge.prompt_hint is not None:
                challenge["hint"] = line.challenge.prompt_hint
            entry["challenge"] = challenge
        lines.append(entry)
    document = {
        "kind": "pcex-example",
        "schema_version": PCEX_SCHEMA_VERSION,
        "title": example.title,
        "description": example.description,
        "language": example.language_tag,
        "lines": lines,
    }
    return _dump(document)
