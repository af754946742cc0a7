"""Acceptance suite: one test per release criterion, tolerances pinned.

The terminal summary (see conftest) prints one PASS/FAIL line per criterion.
"""

from __future__ import annotations

import itertools
import json
import random
import time

import pytest
from fastapi.testclient import TestClient

from weat.analysis import MergePolicy
from weat.authoring import LineSelection, accept_staged, generate_for_example, load_job
from weat.config import ServiceSettings
from weat.evaluation import (
    RatingRecord,
    build_sheets,
    completeness_distribution,
    filter_comparable,
    fleiss_kappa,
    mean_stdev_summary,
    preference_distribution,
    render_completeness_text,
    render_preference_text,
    render_summary_text,
)
from weat.interchange import export_portable, import_portable
from weat.model import validate
from weat.prompting import PromptConfig, build_round_prompt, load_template
from weat.providers import UnparseableResponse, parse_line_explanations
from weat.service import create_app
from weat.storage import ExampleStore
from weat.transcripts import GenerationTranscript, ParsedRound, RawCompletion
from weat.analysis import cosine_similarity

from conftest import (
    EXAMPLE_NAMES,
    FIXED_NOW,
    FIXTURE_ROOT,
    fixture_example,
    mock_provider,
)
from oracles import cosine_oracle, fleiss_oracle
from test_prompting import GOLDEN, transcript_with_round1
from test_evaluation import EVALUATORS, synthetic_corpus, synthetic_ratings


def test_prompt_golden_suite(initials, config):
    """Round-1/round-2 prompts for Initials match pinned goldens byte-exactly;
    the round-2 prompt carries the new-directive and the full round-1
    response; description absent when configured off. Runtime < 1 s."""
    started = time.monotonic()

    round1 = build_round_prompt(initials, config, None)
    assert round1.rendered_text() == (GOLDEN / "initials_round1.txt").read_text("utf-8")

    transcript = transcript_with_round1()
    round2 = build_round_prompt(initials, config, transcript)
    assert round2.rendered_text() == (GOLDEN / "initials_round2.txt").read_text("utf-8")
    directive = load_template("new-round-directive").rstrip("\n")
    assert "new" in directive and directive in round2.rendered_text()
    assert transcript.raw_responses()[0] in round2.rendered_text()

    without = build_round_prompt(
        initials, PromptConfig(include_description=False), None
    )
    assert "Problem description" not in without.rendered_text()
    assert "Extracting initials" not in without.rendered_text()

    assert time.monotonic() - started < 1.0


def test_parser_fuzz():
    """10,000 random-byte inputs yield only ParsedRound or
    UnparseableResponse; conservation holds on 100 structured cases.
    Runtime < 30 s."""
    started = time.monotonic()
    rng = random.Random(0xF00D)
    for _ in range(10_000):
        blob = bytes(rng.randrange(256) for _ in range(rng.randrange(0, 200)))
        raw = RawCompletion(round=1, request_digest="", response_text=blob.decode("latin-1"))
        try:
            result = parse_line_explanations(raw, 10)
        except UnparseableResponse:
            continue
        assert isinstance(result, ParsedRound)

    import re

    record_re = re.compile(r"^\s*(\d+)\s*:\s?(.*)$")
    for _ in range(100):
        lines = []
        for _ in range(rng.randrange(1, 20)):
            choice = rng.randrange(6)
            if choice == 0:
                lines.append(f"{rng.randrange(-2, 14)}: body {rng.randrange(50)}")
            elif choice == 1:
                lines.append("")
            elif choice == 2:
                lines.append("  trailing continuation")
            elif choice == 3:
                lines.append(f"{rng.randrange(1, 6)}:")
            elif choice == 4:
                lines.append("prose preamble")
            else:
                lines.append(f"{rng.randrange(1, 6)}: body {rng.randrange(50)}")
        text = "\n".join(lines)
        raw = RawCompletion(round=1, request_digest="", response_text=text)
        try:
            parsed = parse_line_explanations(raw, 8)
        except UnparseableResponse:
            continue
        kept = list(parsed.by_line.values()) + [f.text for f in parsed.dropped]
        dropped_numbers = {f.line_number for f in parsed.dropped}
        for physical in text.split("\n"):
            content = physical.strip()
            if not content:
                continue
            match = record_re.match(physical)
            if match:
                assert int(match.group(1)) in parsed.by_line or int(
                    match.group(1)
                ) in dropped_numbers
            else:
                assert any(content in fragment for fragment in kept)

    assert time.monotonic() - started < 30.0


def test_cosine_oracle_suite():
    """Identical -> 1.0, disjoint -> 0.0, hand case -> 0.8 (all +/- 1e-9);
    500 random token bags match the independent oracle within 1e-9."""
    assert cosine_similarity("same text here", "same text here") == pytest.approx(1.0, abs=1e-9)
    assert cosine_similarity("foo bar", "baz qux") == pytest.approx(0.0, abs=1e-9)
    assert cosine_similarity("a a b", "a b b") == pytest.approx(0.8, abs=1e-9)

    rng = random.Random(505)
    vocabulary = [f"w{i}" for i in range(40)]
    for _ in range(500):
        a = " ".join(rng.choices(vocabulary, k=rng.randrange(0, 50)))
        b = " ".join(rng.choices(vocabulary, k=rng.randrange(0, 50)))
        assert cosine_similarity(a, b) == pytest.approx(cosine_oracle(a, b), abs=1e-9)


def test_fleiss_kappa_oracle_suite():
    """Unanimous -> exactly 1.0; hand case -> -1/3 +/- 1e-9; 45x15x3
    synthetic fixture matches the independent oracle +/- 1e-9;
    column-permutation invariance."""
    unanimous = [[3, 0, 0], [0, 3, 0], [0, 0, 3]]
    assert fleiss_kappa(unanimous).kappa == 1.0

    assert fleiss_kappa([[2, 1], [1, 2]]).kappa == pytest.approx(-1 / 3, abs=1e-9)

    rng = random.Random(4515)
    counts = []
    for _ in range(45):
        row = [0, 0, 0]
        for _ in range(15):
            row[rng.randrange(3)] += 1
        counts.append(row)
    report = fleiss_kappa(counts)
    assert (report.n_subjects, report.n_raters, report.n_categories) == (45, 15, 3)
    assert report.kappa == pytest.approx(fleiss_oracle(counts), abs=1e-9)

    baseline = report.kappa
    for permutation in itertools.permutations(range(3)):
        permuted = [[row[j] for j in permutation] for row in counts]
        assert fleiss_kappa(permuted).kappa == pytest.approx(baseline, abs=1e-9)


def test_exclusion_accounting():
    """45 both-sided + 18 generated-only + 5 expert-only lines filter to
    exactly (45, 18, 5)."""
    lines = (
        [(("ex", i), f"machine {i}", f"handbook {i}") for i in range(45)]
        + [(("gen", i), f"machine {i}", None) for i in range(18)]
        + [(("exp", i), None, f"handbook {i}") for i in range(5)]
    )
    comparable, generated_only, expert_only = filter_comparable(lines)
    assert (len(comparable), generated_only, expert_only) == (45, 18, 5)


def test_report_fidelity():
    """Distribution and summary tables equal an independent flat recount
    exactly; rows sum to 100 +/- 0.01 at two-decimal rounding; rendered
    layouts carry the study's row/column labels."""
    sheets = build_sheets(synthetic_corpus(), EVALUATORS, seed=2024)
    ratings = synthetic_ratings(sheets, seed=99)

    assignments = {
        (item.example_id, item.line_number): item.assignment
        for item in sheets[0].items
    }

    # flat recount, coded independently of the library internals
    completeness_counts: dict = {}
    preference_counts: dict = {}
    summary_values: dict = {}
    for rating in ratings:
        assignment = assignments[(rating.example_id, rating.line_number)]
        by_source = {
            assignment["A"]: rating.completeness_a,
            assignment["B"]: rating.completeness_b,
        }
        if rating.preference == 0:
            category, preference_value = "same", 0
        else:
            slot = "A" if rating.preference == 1 else "B"
            if assignment[slot] == "generated":
                category, preference_value = "generated", 2
            else:
                category, preference_value = "expert", 1
        for group in (rating.evaluator_group, "overall"):
            for source in ("generated", "expert"):
                key = (source, group, by_source[source])
                completeness_counts[key] = completeness_counts.get(key, 0) + 1
            preference_counts[(group, category)] = (
                preference_counts.get((group, category), 0) + 1
            )
        for group in (rating.evaluator_group, "all"):
            summary_values.setdefault(("generated_completeness", group), []).append(
                by_source["generated"]
            )
            summary_values.setdefault(("expert_completeness", group), []).append(
                by_source["expert"]
            )
            summary_values.setdefault(("preference", group), []).append(
                preference_value
            )

    completeness = completeness_distribution(ratings, sheets)
    for source in ("generated", "expert"):
        for group in ("students", "authors", "overall"):
            total = sum(
                completeness_counts.get((source, group, value), 0) for value in (0, 1, 2)
            )
            for value in (0, 1, 2):
                expected = 100.0 * completeness_counts.get((source, group, value), 0) / total
                assert completeness[source][group][value] == expected
            rounded = [round(completeness[source][group][v], 2) for v in (0, 1, 2)]
            assert abs(sum(rounded) - 100.0) <= 0.01 + 1e-9

    preference = preference_distribution(ratings, sheets)
    for group in ("students", "authors", "overall"):
        total = sum(
            preference_counts.get((group, category), 0)
            for category in ("same", "expert", "generated")
        )
        for category in ("same", "expert", "generated"):
            expected = 100.0 * preference_counts.get((group, category), 0) / total
            assert preference[group][category] == expected
        rounded = [round(preference[group][c], 2) for c in ("same", "expert", "generated")]
        assert abs(sum(rounded) - 100.0) <= 0.01 + 1e-9

    summary = mean_stdev_summary(ratings, sheets)
    for (metric, group), values in summary_values.items():
        n = len(values)
        mean = sum(values) / n
        variance = sum((v - mean) ** 2 for v in values) / (n - 1)
        assert summary[metric][group][0] == pytest.approx(mean, abs=1e-12)
        assert summary[metric][group][1] == pytest.approx(variance**0.5, abs=1e-12)

    completeness_text = render_completeness_text(completeness)
    for label in ("Not complete", "Complete", "Very complete",
                  "Students", "Authors", "Overall"):
        assert label in completeness_text
    preference_text = render_preference_text(preference)
    for label in ("Both are the same", "Expert is better", "Generated is better"):
        assert label in preference_text
    summary_text = render_summary_text(summary)
    for label in ("All", "Students", "Authors"):
        assert label in summary_text


def _run_pipeline(tmp_root) -> dict[str, tuple[str, str]]:
    """create -> 2-round mock generate -> accept-all -> validate -> export
    for all 8 fixture examples; returns portable and pcex documents."""
    from weat.interchange import export_pcex

    store = ExampleStore(tmp_root)
    documents: dict[str, tuple[str, str]] = {}
    for name in EXAMPLE_NAMES:
        example = fixture_example(name, now=FIXED_NOW)
        store.store(example)
        job = generate_for_example(
            store, name, PromptConfig(), mock_provider(name)
        )
        assert job.status == "awaiting_review"
        assert job.rounds_done == 2
        assert job.similarity is not None and job.similarity.per_round
        staged_lines = set().union(*(set(r.by_line) for r in job.staged_rounds))
        accepted = accept_staged(store, name, now=FIXED_NOW)
        explained = {
            line.number for line in accepted.lines if line.explanations
        }
        assert explained == staged_lines  # every fixture-covered line landed
        assert validate(accepted) == []
        documents[name] = (export_portable(accepted), export_pcex(accepted))
    return documents


def test_end_to_end_mock_run(tmp_path):
    """All 8 fixtures run the full pipeline; portable round-trip is the
    identity; a repeated run is byte-identical. Runtime < 10 s."""
    started = time.monotonic()
    first = _run_pipeline(tmp_path / "run1")
    for name, (portable, _) in first.items():
        assert import_portable(portable) is not None
        restored = import_portable(portable)
        assert export_portable(restored) == portable  # round-trip identity
    second = _run_pipeline(tmp_path / "run2")
    assert first == second
    assert time.monotonic() - started < 10.0


def test_service_contract(tmp_path, monkeypatch):
    """Full API surface against a temp storage root: JobConflict on
    concurrent generate, version conflict on stale PATCH, staged
    explanations never persisted without accept. Runtime < 20 s."""
    started = time.monotonic()
    settings = ServiceSettings(
        storage_root=tmp_path / "svc",
        provider={"kind": "mock", "fixture_path": str(FIXTURE_ROOT / "Initials")},
    )
    with TestClient(create_app(settings)) as client:
        assert client.get("/healthz").json() == {"status": "ok"}

        source = (FIXTURE_ROOT / "Initials" / "source.java").read_text("utf-8")
        created = client.post(
            "/api/v1/examples",
            json={"title": "Initials", "source": source, "id": "Initials",
                  "description": "Extracting initials from full name."},
        )
        assert created.status_code == 201

        assert client.get("/api/v1/examples").status_code == 200
        assert client.get("/api/v1/examples/Initials").status_code == 200
        assert client.get("/api/v1/examples/ghost").status_code == 404

        # concurrent generate -> second request conflicts while first runs
        import weat.authoring as authoring_module

        original = authoring_module.run_job

        def slow_run(store, job, config, provider, **kwargs):
            time.sleep(0.3)
            return original(store, job, config, provider, **kwargs)

        monkeypatch.setattr(authoring_module, "run_job", slow_run)
        first = client.post("/api/v1/examples/Initials/generate", json={})
        assert first.status_code == 202
        conflict = client.post("/api/v1/examples/Initials/generate", json={})
        assert conflict.status_code == 409
        monkeypatch.setattr(authoring_module, "run_job", original)

        deadline = time.monotonic() + 10
        job = None
        while time.monotonic() < deadline:
            response = client.get("/api/v1/examples/Initials/job")
            job = response.json()["job"]
            if job["status"] == "awaiting_review":
                break
            time.sleep(0.02)
        assert job is not None and job["status"] == "awaiting_review"

        # staged explanations are not persisted before accept
        example = client.get("/api/v1/examples/Initials").json()["example"]
        assert all(line["explanations"] == [] for line in example["lines"])
        exported = client.get("/api/v1/examples/Initials/export?format=portable")
        assert '"explanations": []' in exported.text

        accepted = client.post(
            "/api/v1/examples/Initials/accept",
            json={"selections": {"5": {"include": False}}},
        )
        assert accepted.status_code == 200
        lines = accepted.json()["example"]["lines"]
        assert lines[4]["explanations"] == []
        assert any(line["explanations"] for line in lines)
        revision = accepted.json()["revision"]

        # stale PATCH -> version conflict; fresh PATCH succeeds
        ok = client.patch(
            "/api/v1/examples/Initials/lines/5/explanations/1",
            json={"text": "hand note", "revision": revision},
        )
        assert ok.status_code == 200
        stale = client.patch(
            "/api/v1/examples/Initials/lines/5/explanations/1",
            json={"text": "conflicting note", "revision": revision},
        )
        assert stale.status_code == 409

        challenge = client.post(
            "/api/v1/examples/Initials/challenge/3",
            json={"distractors": ["String fullName = \"\";"],
                  "revision": ok.json()["revision"]},
        )
        assert challenge.status_code == 200

        pcex = client.get("/api/v1/examples/Initials/export?format=pcex")
        assert pcex.status_code == 200

        assert client.delete("/api/v1/examples/Initials").status_code == 204
        assert client.get("/api/v1/examples/Initials").status_code == 404

    assert time.monotonic() - started < 20.0
