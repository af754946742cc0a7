"""File-backed example store.

One directory per example under the storage root:

    <root>/<id>/example.weat.json   portable document (the stored truth)
    <root>/<id>/meta.json           revision counter
    <root>/<id>/job.json            generation job state, when present
    <root>/<id>/transcript/         verbatim round-<r>.txt response files

Writes are atomic (temp file in the same directory + rename), so a crashed
write leaves the last complete version in place; loads never look at temp
files. Mutations on one example serialize behind a per-example lock and an
optimistic revision counter: a writer presenting a stale revision gets
VersionConflict instead of silently overwriting.
"""

from __future__ import annotations

import json
import shutil
import tempfile
import threading
from dataclasses import dataclass
from datetime import datetime
from pathlib import Path

from .errors import ProviderIOError, WeatError
from .interchange import SchemaViolation, UnsupportedVersion, export_portable, import_portable
from .model import WorkedExample

EXAMPLE_FILE = "example.weat.json"
META_FILE = "meta.json"
JOB_FILE = "job.json"
TRANSCRIPT_DIR = "transcript"


class NotFound(WeatError):
    pass


class VersionConflict(WeatError):
    pass


class CorruptRecord(ProviderIOError):
    pass


@dataclass
class ExampleSummary:
    """Listing entry for one stored example."""

    id: str
    title: str
    language_tag: str
    line_count: int
    updated_at: datetime
    revision: int


def _atomic_write(path: Path, data: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    handle = tempfile.NamedTemporaryFile(
        "w",
        encoding="utf-8",
        dir=path.parent,
        prefix=path.name + ".tmp",
        delete=False,
    )
    try:
        with handle:
            handle.write(data)
        Path(handle.name).replace(path)
    except BaseException:
        Path(handle.name).unlink(missing_ok=True)
        raise


class ExampleStore:
    """Thread-safe, file-backed persistence for examples and job state."""

    def __init__(self, root: str | Path) -> None:
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self._locks: dict[str, threading.RLock] = {}
        self._locks_guard = threading.Lock()

    def lock(self, example_id: str) -> threading.RLock:
        """The mutation lock for one example id."""
        with self._locks_guard:
            if example_id not in self._locks:
                self._locks[example_id] = threading.RLock()
            return self._locks[example_id]

    def _dir(self, example_id: str) -> Path:
        return self.root / example_id

    def exists(self, example_id: str) -> bool:
        return (self._dir(example_id) / EXAMPLE_FILE).is_file()

    def revision(self, example_id: str) -> int:
        meta_path = self._dir(example_id) / META_FILE
        if not meta_path.is_file():
            return 0
        try:
            return int(json.loads(meta_path.read_text("utf-8"))["revision"])
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise CorruptRecord(f"unreadable metadata at {meta_path}: {exc}") from exc

    def store(
        self, example: WorkedExample, *, expected_revision: int | None = None
    ) -> int:
        """Persist the example atomically; returns the new revision.

        Args:
            example: A valid example (stored as its portable document).
            expected_revision: When given, the write only proceeds if it
                matches the current revision (optimistic concurrency).

        Raises:
            VersionConflict: Stale ``expected_revision``.
            InvalidExample: The example fails validation.
        """
        document = export_portable(example)
        with self.lock(example.id):
            current = self.revision(example.id)
            if expected_revision is not None and expected_revision != current:
                raise VersionConflict(
                    f"example {example.id} is at revision {current}, "
                    f"write expected {expected_revision}"
                )
            new_revision = current + 1
            _atomic_write(self._dir(example.id) / EXAMPLE_FILE, document)
            _atomic_write(
                self._dir(example.id) / META_FILE,
                json.dumps({"revision": new_revision}) + "\n",
            )
            return new_revision

    def load(self, example_id: str) -> tuple[WorkedExample, int]:
        """Load and validate one example; returns (example, revision).

        Raises:
            NotFound: Unknown id.
            CorruptRecord: Unreadable or invalid stored document
                (fails loud with the file path).
        """
        path = self._dir(example_id) / EXAMPLE_FILE
        with self.lock(example_id):
            if not path.is_file():
                raise NotFound(f"no example with id {example_id!r}")
            try:
                example = import_portable(path.read_text("utf-8"))
            except (SchemaViolation, UnsupportedVersion) as exc:
                raise CorruptRecord(f"corrupt example at {path}: {exc}") from exc
            return example, self.revision(example_id)

    def list(self) -> list[ExampleSummary]:
        """Summaries of all stored examples, most recently updated first."""
        summaries = []
        for entry in sorted(self.root.iterdir()) if self.root.is_dir() else []:
            if not (entry / EXAMPLE_FILE).is_file():
                continue
            example, revision = self.load(entry.name)
            summaries.append(
                ExampleSummary(
                    id=example.id,
                    title=example.title,
                    language_tag=example.language_tag,
                    line_count=len(example.lines),
                    updated_at=example.updated_at,
                    revision=revision,
                )
            )
        summaries.sort(key=lambda summary: summary.updated_at, reverse=True)
        return summaries

    def delete(self, example_id: str) -> None:
        """Remove an example and everything recorded with it.

        Raises:
            NotFound: Unknown id.
        """
        with self.lock(example_id):
            if not self.exists(example_id):
                raise NotFound(f"no example with id {example_id!r}")
            shutil.rmtree(self._dir(example_id))

    # Job state and transcripts ------------------------------------------------

    def write_job(self, example_id: str, payload: dict) -> None:
        _atomic_write(
            self._dir(example_id) / JOB_FILE,
            json.dumps(payload, indent=2, sort_keys=True) + "\n",
        )

    def read_job(self, example_id: str) -> dict | None:
        path = self._dir(example_id) / JOB_FILE
        if not path.is_file():
            return None
        try:
            return json.loads(path.read_text("utf-8"))
        except json.JSONDecodeError as exc:
            raise CorruptRecord(f"corrupt job state at {path}: {exc}") from exc

    def write_transcript_round(
        self, example_id: str, round_number: int, response_text: str
    ) -> Path:
        path = (
            self._dir(example_id) / TRANSCRIPT_DIR / f"round-{round_number}.txt"
        )
        _atomic_write(path, response_text)
        return path

    def read_transcript_round(self, example_id: str, round_number: int) -> str:
        path = (
            self._dir(example_id) / TRANSCRIPT_DIR / f"round-{round_number}.txt"
        )
        if not path.is_file():
            raise NotFound(f"no transcript round {round_number} for {example_id!r}")
        return path.read_text("utf-8")
