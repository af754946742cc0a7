"""Generation orchestration with human-in-the-loop acceptance.

A generation job renders the prompt, calls the provider, and parses the
response for each round, staging the results next to the example. Staged
explanations never touch the persisted example: they become content only
when the author accepts them, optionally excluding lines and editing texts.
That boundary is structural, not advisory.
"""

from __future__ import annotations

import traceback
from dataclasses import dataclass, field
from datetime import datetime

from .analysis import (
    MergePolicy,
    SimilarityReport,
    cosine_similarity,
    merge_rounds,
    round_similarity,
)
from .errors import ProviderIOError, WeatError
from .model import ExplanationLevel, LineOutOfRange, Origin, WorkedExample
from .prompting import PromptConfig, build_round_prompt
from .providers import ProviderSpec, complete, parse_line_explanations
from .storage import ExampleStore, NotFound, TRANSCRIPT_DIR
from .transcripts import DroppedFragment, GenerationTranscript, ParsedRound

NON_TERMINAL = ("pending", "round_running", "awaiting_review")


class ExampleNotFound(NotFound):
    pass


class JobConflict(WeatError):
    pass


class NoStagedJob(WeatError):
    pass


class ProviderError(ProviderIOError):
    pass


@dataclass
class GenerationJob:
    """State of one generation run against one example."""

    example_id: str
    status: str = "pending"
    rounds_done: int = 0
    transcript_ref: str = TRANSCRIPT_DIR
    error: str | None = None
    staged_rounds: list[ParsedRound] = field(default_factory=list)
    similarity: SimilarityReport | None = None

    def to_dict(self) -> dict:
        return {
            "example_id": self.example_id,
            "status": self.status,
            "rounds_done": self.rounds_done,
            "transcript_ref": self.transcript_ref,
            "error": self.error,
            "staged_rounds": [
                {
                    "round": parsed.round,
                    "by_line": {str(k): v for k, v in sorted(parsed.by_line.items())},
                    "dropped": [
                        {
                            "text": fragment.text,
                            "reason": fragment.reason,
                            "line_number": fragment.line_number,
                        }
                        for fragment in parsed.dropped
                    ],
                }
                for parsed in self.staged_rounds
            ],
            "similarity": None
            if self.similarity is None
            else {
                "example_id": self.similarity.example_id,
                "per_round": [list(pair) for pair in self.similarity.per_round],
                "per_line": {
                    str(number): [list(pair) for pair in pairs]
                    for number, pairs in sorted(self.similarity.per_line.items())
                },
            },
        }

    @classmethod
    def from_dict(cls, payload: dict) -> GenerationJob:
        similarity = payload.get("similarity")
        return cls(
            example_id=payload["example_id"],
            status=payload["status"],
            rounds_done=payload["rounds_done"],
            transcript_ref=payload.get("transcript_ref", TRANSCRIPT_DIR),
            error=payload.get("error"),
            staged_rounds=[
                ParsedRound(
                    round=entry["round"],
                    by_line={int(k): v for k, v in entry["by_line"].items()},
                    dropped=[
                        DroppedFragment(
                            text=item["text"],
                            reason=item["reason"],
                            line_number=item.get("line_number"),
                        )
                        for item in entry.get("dropped", [])
                    ],
                )
                for entry in payload.get("staged_rounds", [])
            ],
            similarity=None
            if similarity is None
            else SimilarityReport(
                example_id=similarity["example_id"],
                per_round=[tuple(pair) for pair in similarity["per_round"]],
                per_line={
                    int(number): [tuple(pair) for pair in pairs]
                    for number, pairs in similarity["per_line"].items()
                },
            ),
        )


@dataclass
class LineSelection:
    """Author decision for one staged line: keep it, and optional edits.

    ``edits`` maps a round number to replacement text for what that round
    produced on this line; edited text enters the merge with origin
    ``edited`` and the round kept as provenance.
    """

    include: bool = True
    edits: dict[int, str] = field(default_factory=dict)


def load_job(store: ExampleStore, example_id: str) -> GenerationJob | None:
    payload = store.read_job(example_id)
    return None if payload is None else GenerationJob.from_dict(payload)


def _save_job(store: ExampleStore, job: GenerationJob) -> None:
    store.write_job(job.example_id, job.to_dict())


def begin_job(store: ExampleStore, example_id: str) -> GenerationJob:
    """Create and persist a pending job, enforcing one job per example.

    Raises:
        ExampleNotFound: Unknown example id.
        JobConflict: Another non-terminal job exists for this example.
    """
    with store.lock(example_id):
        try:
            store.load(example_id)
        except NotFound as exc:
            raise ExampleNotFound(str(exc)) from exc
        existing = load_job(store, example_id)
        if existing is not None and existing.status in NON_TERMINAL:
            raise JobConflict(
                f"example {example_id} already has a {existing.status} job"
            )
        job = GenerationJob(example_id=example_id)
        _save_job(store, job)
        return job


def run_job(
    store: ExampleStore,
    job: GenerationJob,
    config: PromptConfig,
    provider: ProviderSpec,
    *,
    policy: MergePolicy | None = None,
    transport=None,
    sleep=None,
) -> GenerationJob:
    """Run the rounds of a pending job and stage the results.

    Rounds run sequentially up to ``config.max_rounds``, stopping early when
    a round's whole-text cosine against the previous round reaches the
    saturation threshold. The verbatim response of every round is written
    under the example's transcript directory. The job ends in
    ``awaiting_review``; nothing is attached to the example.

    Raises:
        ProviderError: The provider failed; the job is persisted as
            ``failed`` with the error text before raising.
    """
    policy = policy or MergePolicy()
    example_id = job.example_id
    example, _ = store.load(example_id)
    transcript = GenerationTranscript(example_id=example_id)
    kwargs = {}
    if transport is not None:
        kwargs["transport"] = transport
    if sleep is not None:
        kwargs["sleep"] = sleep
    try:
        for round_number in range(1, config.max_rounds + 1):
            job.status = "round_running"
            _save_job(store, job)
            prompt = build_round_prompt(example, config, transcript)
            raw = complete(prompt, provider, config, **kwargs)
            parsed = parse_line_explanations(raw, len(example.lines))
            transcript.add_round(raw, parsed)
            store.write_transcript_round(example_id, round_number, raw.response_text)
            job.rounds_done = round_number
            if round_number >= 2:
                current = transcript.parsed_rounds[-1]
                previous = transcript.parsed_rounds[-2]
                score = cosine_similarity(
                    _concat_round(current), _concat_round(previous)
                )
                if score >= policy.saturation_threshold:
                    break
    except WeatError as exc:
        job.status = "failed"
        job.error = str(exc)
        _save_job(store, job)
        raise ProviderError(f"generation failed: {exc}") from exc
    except Exception as exc:  # defensive: never leave a job dangling
        job.status = "failed"
        job.error = "".join(
            traceback.format_exception_only(type(exc), exc)
        ).strip()
        _save_job(store, job)
        raise

    job.status = "awaiting_review"
    job.staged_rounds = transcript.parsed_rounds
    job.similarity = round_similarity(transcript.parsed_rounds, example_id)
    _save_job(store, job)
    return job


def generate_for_example(
    store: ExampleStore,
    example_id: str,
    config: PromptConfig,
    provider: ProviderSpec,
    *,
    policy: MergePolicy | None = None,
    transport=None,
    sleep=None,
) -> GenerationJob:
    """Run a full generation job synchronously; see :func:`begin_job` and
    :func:`run_job` for the two phases and the errors they raise."""
    job = begin_job(store, example_id)
    return run_job(
        store, job, config, provider, policy=policy, transport=transport, sleep=sleep
    )


def _concat_round(parsed: ParsedRound) -> str:
    return "\n".join(parsed.by_line[number] for number in sorted(parsed.by_line))


def accept_staged(
    store: ExampleStore,
    example_id: str,
    selections: dict[int, LineSelection] | None = None,
    *,
    policy: MergePolicy | None = None,
    now: datetime | None = None,
) -> WorkedExample:
    """Merge the staged rounds into the example per the author's selections.

    ``selections`` maps line numbers to decisions; unlisted lines are
    included unedited, and ``None`` accepts everything as staged. Edited
    texts replace the staged round text before merging, so deduplication
    sees what the author actually wrote. The job completes and the example
    is persisted atomically.

    Raises:
        NoStagedJob: No job, or the job is not awaiting review.
        LineOutOfRange: A selection or edit references a missing line.
    """
    policy = policy or MergePolicy()
    with store.lock(example_id):
        try:
            example, revision = store.load(example_id)
        except NotFound as exc:
            raise ExampleNotFound(str(exc)) from exc
        job = load_job(store, example_id)
        if job is None or job.status != "awaiting_review":
            status = "absent" if job is None else job.status
            raise NoStagedJob(
                f"example {example_id} has no job awaiting review (job {status})"
            )
        selections = selections or {}
        line_count = len(example.lines)
        for number in selections:
            if not 1 <= number <= line_count:
                raise LineOutOfRange(
                    f"selection for line {number} outside 1..{line_count}"
                )

        edited_pairs: dict[tuple[int, int], str] = {}
        effective_rounds: list[ParsedRound] = []
        for parsed in job.staged_rounds:
            by_line: dict[int, str] = {}
            for number, text in parsed.by_line.items():
                selection = selections.get(number)
                if selection is not None and not selection.include:
                    continue
                if selection is not None and parsed.round in selection.edits:
                    text = selection.edits[parsed.round]
                    edited_pairs[(number, parsed.round)] = text
                by_line[number] = text
            effective_rounds.append(ParsedRound(round=parsed.round, by_line=by_line))

        merged = merge_rounds(example, effective_rounds, policy, now=now)
        for line in merged.lines:
            for index, level in enumerate(line.explanations):
                key = (line.number, level.source_round)
                if (
                    level.origin is Origin.GENERATED
                    and level.source_round is not None
                    and key in edited_pairs
                    and level.text == edited_pairs[key]
                ):
                    line.explanations[index] = ExplanationLevel(
                        level=level.level,
                        text=level.text,
                        origin=Origin.EDITED,
                        source_round=level.source_round,
                    )

        job.status = "complete"
        _save_job(store, job)
        store.store(merged, expected_revision=revision)
        return merged
