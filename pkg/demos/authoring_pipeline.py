#!/usr/bin/env python3
"""Walk through the authoring loop end to end, offline.

Creates a worked example from one of the bundled Java fixtures, runs a
two-round mock generation against the recorded responses, inspects the
staged explanations and the round-similarity report, accepts everything
except one line, and exports both document formats.

Run from the repository root:

    python3 demos/authoring_pipeline.py
"""

from pathlib import Path
from tempfile import TemporaryDirectory

from weat import (
    LineSelection,
    PromptConfig,
    ProviderSpec,
    accept_staged,
    create_example,
    export_pcex,
    export_portable,
    flag_structural_lines,
    generate_for_example,
    similarity_report_csv,
)
from weat.storage import ExampleStore

FIXTURES = Path(__file__).parent.parent / "tests" / "fixtures" / "examples"


def main() -> None:
    fixture = FIXTURES / "Initials"
    example = create_example(
        title="Initials",
        description=(fixture / "description.txt").read_text("utf-8").strip(),
        source=(fixture / "source.java").read_text("utf-8"),
        language_tag="java",
        example_id="Initials",
    )
    print(f"created example {example.id!r} with {len(example.lines)} lines")

    flagged = flag_structural_lines(example)
    print(f"structural lines (advisory, rarely worth explaining): {sorted(flagged)}")

    with TemporaryDirectory() as scratch:
        store = ExampleStore(scratch)
        store.store(example)

        provider = ProviderSpec(kind="mock", fixture_path=fixture)
        job = generate_for_example(store, "Initials", PromptConfig(), provider)
        print(f"\ngeneration finished: status={job.status}, rounds={job.rounds_done}")

        for parsed in job.staged_rounds:
            print(f"\nstaged round {parsed.round}:")
            for number in sorted(parsed.by_line):
                print(f"  {number}: {parsed.by_line[number]}")

        print("\nround similarity (1.0 would mean the round added nothing):")
        print(similarity_report_csv(job.similarity))

        # The human side of the collaboration: drop the explanation for the
        # closing brace on line 9, keep the rest as generated.
        accepted = accept_staged(
            store, "Initials", {9: LineSelection(include=False)}
        )
        explained = [line.number for line in accepted.lines if line.explanations]
        print(f"accepted; lines with explanations: {explained}")

        print("\nportable document (excerpt):")
        print("\n".join(export_portable(accepted).splitlines()[:14]))
        print("...\n\nPCEX-style document (excerpt):")
        print("\n".join(export_pcex(accepted).splitlines()[:10]))
        print("...")


if __name__ == "__main__":
    main()
