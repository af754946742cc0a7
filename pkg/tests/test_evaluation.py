"""Evaluation harness: filtering, sheets, tables, agreement."""

from __future__ import annotations

import itertools
import random

import pytest

from weat.evaluation import (
    DegenerateAgreement,
    EmptyCell,
    InternalRating,
    MixedConditionLine,
    NoComparableLines,
    OrphanRating,
    RaggedMatrix,
    RatingIngestError,
    RatingRecord,
    blind_preference,
    build_sheets,
    completeness_distribution,
    filter_comparable,
    fleiss_kappa,
    internal_rating_summary,
    mean_stdev_summary,
    parse_ratings_csv,
    preference_distribution,
    render_completeness_text,
    render_preference_text,
    render_sheet_csv,
    render_sheet_markdown,
    render_summary_text,
    sheets_from_key_json,
    sheets_to_key_json,
    unblind_preference,
)
from weat.model import Origin, attach_explanation, create_example
from conftest import FIXED_NOW
from oracles import (
    cohen_style_two_rater,
    fleiss_oracle,
    recount_completeness,
    recount_mean_stdev,
    recount_preference,
)


def synthetic_corpus(n_examples: int = 3, lines_per_example: int = 15):
    """Examples whose every line has one generated and one expert level."""
    examples = []
    for index in range(n_examples):
        source = "\n".join(
            f"int v{line} = {line};" for line in range(1, lines_per_example + 1)
        )
        example = create_example(
            f"Example {index}", "desc", source, "java",
            example_id=f"ex{index}", now=FIXED_NOW,
        )
        for line in range(1, lines_per_example + 1):
            # wording deliberately avoids the source names so renderings can
            # be checked for assignment leaks
            example = attach_explanation(
                example, line, f"machine wording for {index}/{line}",
                origin=Origin.GENERATED, source_round=1,
            )
            example = attach_explanation(
                example, line, f"handbook wording for {index}/{line}",
                origin=Origin.HUMAN,
            )
        examples.append(example)
    return examples


def synthetic_ratings(sheets, seed: int = 42):
    """One rating per evaluator per item, deterministic from the seed."""
    rng = random.Random(seed)
    groups = {
        sheet.evaluator_id: ("students" if index < 9 else "authors")
        for index, sheet in enumerate(sheets)
    }
    ratings = []
    for sheet in sheets:
        for item in sheet.items:
            ratings.append(
                RatingRecord(
                    evaluator_id=sheet.evaluator_id,
                    evaluator_group=groups[sheet.evaluator_id],
                    example_id=item.example_id,
                    line_number=item.line_number,
                    completeness_a=rng.randrange(3),
                    completeness_b=rng.randrange(3),
                    preference=rng.randrange(3),
                )
            )
    return ratings


EVALUATORS = [f"e{i:02d}" for i in range(15)]


class TestFilterComparable:
    def test_paper_shaped_counts(self):
        lines = (
            [(f"b{i}", "gen", "exp") for i in range(45)]
            + [(f"g{i}", "gen", None) for i in range(18)]
            + [(f"e{i}", None, "exp") for i in range(5)]
        )
        comparable, generated_only, expert_only = filter_comparable(lines)
        assert (len(comparable), generated_only, expert_only) == (45, 18, 5)

    def test_all_both_sided(self):
        comparable, generated_only, expert_only = filter_comparable(
            [(1, "g", "e"), (2, "g", "e")]
        )
        assert (len(comparable), generated_only, expert_only) == (2, 0, 0)

    def test_all_one_sided(self):
        comparable, *_ = filter_comparable([(1, "g", None), (2, None, "e")])
        assert comparable == []


class TestBuildSheets:
    def test_same_seed_identical(self):
        examples = synthetic_corpus()
        first = build_sheets(examples, EVALUATORS, seed=7)
        second = build_sheets(examples, EVALUATORS, seed=7)
        assert sheets_to_key_json(first) == sheets_to_key_json(second)

    def test_seed_changes_some_assignment(self):
        examples = synthetic_corpus()  # 45 comparable lines
        keys = set()
        for seed in range(100):
            sheets = build_sheets(examples, ["only"], seed=seed)
            keys.add(
                tuple(item.assignment["A"] for item in sheets[0].items)
            )
        assert len(keys) == 100  # all distinct; collisions all but impossible

    def test_balance_within_one(self):
        examples = synthetic_corpus()
        for seed in range(20):
            sheets = build_sheets(examples, ["only"], seed=seed)
            a_generated = sum(
                1 for item in sheets[0].items if item.assignment["A"] == "generated"
            )
            assert abs(a_generated - (len(sheets[0].items) - a_generated)) <= 1

    def test_assignment_shared_across_evaluators(self):
        sheets = build_sheets(synthetic_corpus(), EVALUATORS, seed=3)
        reference = [item.assignment for item in sheets[0].items]
        for sheet in sheets[1:]:
            assert [item.assignment for item in sheet.items] == reference

    def test_no_comparable_lines(self):
        example = create_example("T", "", "int x;", "java", now=FIXED_NOW)
        with pytest.raises(NoComparableLines):
            build_sheets([example], EVALUATORS, seed=1)

    def test_rendered_sheets_hide_assignment(self):
        sheets = build_sheets(synthetic_corpus(), ["e00"], seed=5)
        markdown = render_sheet_markdown(sheets[0])
        csv_text = render_sheet_csv(sheets[0])
        for rendered in (markdown, csv_text):
            assert "generated" not in rendered.lower()
            assert "expert" not in rendered.lower()
        assert "Explanation A" in markdown

    def test_key_round_trip(self):
        sheets = build_sheets(synthetic_corpus(), EVALUATORS[:2], seed=5)
        restored = sheets_from_key_json(sheets_to_key_json(sheets))
        assert restored == sheets

    def test_level_one_only_mode(self):
        examples = synthetic_corpus(1, 2)
        extra = attach_explanation(
            examples[0], 1, "generated second level",
            origin=Origin.GENERATED, source_round=2,
        )
        sheets_all = build_sheets([extra], ["e"], seed=1)
        sheets_first = build_sheets([extra], ["e"], seed=1, levels="first")
        all_texts = {sheets_all[0].items[0].slot_a, sheets_all[0].items[0].slot_b}
        first_texts = {sheets_first[0].items[0].slot_a, sheets_first[0].items[0].slot_b}
        assert any("second level" in text for text in all_texts)
        assert not any("second level" in text for text in first_texts)


class TestUnblinding:
    def test_round_trip_identity(self):
        for assignment in ({"A": "generated", "B": "expert"}, {"A": "expert", "B": "generated"}):
            for preference in (0, 1, 2):
                category = unblind_preference(preference, assignment)
                assert blind_preference(category, assignment) == preference

    def test_slot_a_expert_counts_for_expert(self):
        assert unblind_preference(1, {"A": "expert", "B": "generated"}) == "expert"


class TestDistributions:
    def test_single_rating_generated_very_complete(self):
        sheets = build_sheets(synthetic_corpus(1, 1), ["e00"], seed=1)
        item = sheets[0].items[0]
        completeness_a = 2 if item.assignment["A"] == "generated" else 0
        completeness_b = 2 if item.assignment["B"] == "generated" else 0
        rating = RatingRecord(
            evaluator_id="e00",
            evaluator_group="students",
            example_id=item.example_id,
            line_number=item.line_number,
            completeness_a=completeness_a,
            completeness_b=completeness_b,
            preference=0,
        )
        table = completeness_distribution([rating], sheets)
        assert table["generated"]["overall"] == {0: 0.0, 1: 0.0, 2: 100.0}

    def test_preference_single_same(self):
        sheets = build_sheets(synthetic_corpus(1, 1), ["e00"], seed=1)
        item = sheets[0].items[0]
        rating = RatingRecord(
            evaluator_id="e00", evaluator_group="authors",
            example_id=item.example_id, line_number=item.line_number,
            completeness_a=1, completeness_b=1, preference=0,
        )
        table = preference_distribution([rating], sheets)
        assert table["overall"]["same"] == 100.0

    def test_preference_unblinds_slots(self):
        sheets = build_sheets(synthetic_corpus(1, 2), ["e00"], seed=1)
        expert_first = next(
            item for item in sheets[0].items if item.assignment["A"] == "expert"
        )
        rating = RatingRecord(
            evaluator_id="e00", evaluator_group="students",
            example_id=expert_first.example_id, line_number=expert_first.line_number,
            completeness_a=1, completeness_b=1, preference=1,
        )
        table = preference_distribution([rating], sheets)
        assert table["overall"]["expert"] == 100.0
        assert table["overall"]["generated"] == 0.0

    def test_completeness_matches_recount_oracle(self):
        sheets = build_sheets(synthetic_corpus(), EVALUATORS, seed=11)
        ratings = synthetic_ratings(sheets)
        table = completeness_distribution(ratings, sheets)

        assignments = {
            (item.example_id, item.line_number): item.assignment
            for item in sheets[0].items
        }
        observations = []
        for rating in ratings:
            assignment = assignments[(rating.example_id, rating.line_number)]
            for slot, value in (("A", rating.completeness_a), ("B", rating.completeness_b)):
                observations.append(
                    (assignment[slot], rating.evaluator_group, value, 1)
                )
        assert table == recount_completeness(observations)

    def test_preference_matches_recount_oracle(self):
        sheets = build_sheets(synthetic_corpus(), EVALUATORS, seed=11)
        ratings = synthetic_ratings(sheets)
        table = preference_distribution(ratings, sheets)

        assignments = {
            (item.example_id, item.line_number): item.assignment
            for item in sheets[0].items
        }
        observations = []
        for rating in ratings:
            assignment = assignments[(rating.example_id, rating.line_number)]
            if rating.preference == 0:
                category = "same"
            else:
                slot = "A" if rating.preference == 1 else "B"
                category = "generated" if assignment[slot] == "generated" else "expert"
            observations.append((rating.evaluator_group, category))
        assert table == recount_preference(observations)

    def test_rows_sum_to_hundred(self):
        sheets = build_sheets(synthetic_corpus(), EVALUATORS, seed=11)
        ratings = synthetic_ratings(sheets)
        completeness = completeness_distribution(ratings, sheets)
        for source in completeness:
            for group, row in completeness[source].items():
                rounded = [round(value, 2) for value in row.values()]
                assert abs(sum(rounded) - 100.0) <= 0.01 + 1e-9
        preference = preference_distribution(ratings, sheets)
        for group, row in preference.items():
            rounded = [round(value, 2) for value in row.values()]
            assert abs(sum(rounded) - 100.0) <= 0.01 + 1e-9

    def test_orphan_rating(self):
        sheets = build_sheets(synthetic_corpus(), EVALUATORS, seed=11)
        orphan = RatingRecord(
            evaluator_id="nobody", evaluator_group="students",
            example_id="ex0", line_number=1,
            completeness_a=1, completeness_b=1, preference=0,
        )
        with pytest.raises(OrphanRating):
            completeness_distribution([orphan], sheets)

    def test_layout_labels(self):
        sheets = build_sheets(synthetic_corpus(), EVALUATORS, seed=11)
        ratings = synthetic_ratings(sheets)
        completeness_text = render_completeness_text(
            completeness_distribution(ratings, sheets)
        )
        for label in ("Not complete", "Complete", "Very complete", "Students", "Authors", "Overall"):
            assert label in completeness_text
        preference_text = render_preference_text(preference_distribution(ratings, sheets))
        for label in ("Both are the same", "Expert is better", "Generated is better"):
            assert label in preference_text


class TestMeanStdev:
    def test_identical_ratings_zero_stdev(self):
        sheets = build_sheets(synthetic_corpus(1, 3), ["e00", "e01"], seed=2)
        ratings = []
        for sheet, group in zip(sheets, ("students", "authors")):
            for item in sheet.items:
                ratings.append(
                    RatingRecord(
                        evaluator_id=sheet.evaluator_id, evaluator_group=group,
                        example_id=item.example_id, line_number=item.line_number,
                        completeness_a=1, completeness_b=1, preference=0,
                    )
                )
        table = mean_stdev_summary(ratings, sheets)
        for metric in table:
            for group, (mean, stdev) in table[metric].items():
                assert stdev == 0.0

    def test_two_ratings_hand_value(self):
        values = [1, 2]
        mean, stdev = recount_mean_stdev(values)
        assert mean == pytest.approx(1.5)
        assert stdev == pytest.approx(0.7071, abs=1e-4)

        sheets = build_sheets(synthetic_corpus(1, 2), ["e00"], seed=2)
        items = sheets[0].items
        ratings = []
        for item, value in zip(items, values):
            completeness_a = value if item.assignment["A"] == "generated" else 0
            completeness_b = value if item.assignment["B"] == "generated" else 0
            ratings.append(
                RatingRecord(
                    evaluator_id="e00", evaluator_group="students",
                    example_id=item.example_id, line_number=item.line_number,
                    completeness_a=completeness_a, completeness_b=completeness_b,
                    preference=0,
                )
            )
        with pytest.raises(EmptyCell):
            # authors never rated anything -> authors cells are empty
            mean_stdev_summary(ratings, sheets)
        # restrict to the populated groups via a students-only corpus check
        table_groups = ("all", "students")
        from weat.evaluation.tables import join_observations

        observations = join_observations(ratings, sheets)
        generated_values = [obs.completeness["generated"] for obs in observations]
        assert recount_mean_stdev(generated_values) == (
            pytest.approx(1.5), pytest.approx(0.7071, abs=1e-4),
        )

    def test_matches_recount_oracle(self):
        sheets = build_sheets(synthetic_corpus(), EVALUATORS, seed=11)
        ratings = synthetic_ratings(sheets)
        table = mean_stdev_summary(ratings, sheets)

        assignments = {
            (item.example_id, item.line_number): item.assignment
            for item in sheets[0].items
        }
        values: dict[tuple[str, str], list[float]] = {}
        for rating in ratings:
            assignment = assignments[(rating.example_id, rating.line_number)]
            generated_value = (
                rating.completeness_a if assignment["A"] == "generated" else rating.completeness_b
            )
            expert_value = (
                rating.completeness_a if assignment["A"] == "expert" else rating.completeness_b
            )
            if rating.preference == 0:
                preference_value = 0
            else:
                slot = "A" if rating.preference == 1 else "B"
                preference_value = 2 if assignment[slot] == "generated" else 1
            for group in ("all", rating.evaluator_group):
                values.setdefault(("generated_completeness", group), []).append(generated_value)
                values.setdefault(("expert_completeness", group), []).append(expert_value)
                values.setdefault(("preference", group), []).append(preference_value)
        for (metric, group), cell in values.items():
            expected_mean, expected_stdev = recount_mean_stdev(cell)
            mean, stdev = table[metric][group]
            assert mean == pytest.approx(expected_mean, abs=1e-12)
            assert stdev == pytest.approx(expected_stdev, abs=1e-12)

    def test_summary_layout(self):
        sheets = build_sheets(synthetic_corpus(), EVALUATORS, seed=11)
        ratings = synthetic_ratings(sheets)
        text = render_summary_text(mean_stdev_summary(ratings, sheets))
        for label in ("All", "Students", "Authors", "Which is better?"):
            assert label in text


class TestFleissKappa:
    def test_unanimous_rows_give_one(self):
        report = fleiss_kappa([[3, 0], [0, 3]])
        assert report.kappa == pytest.approx(1.0, abs=1e-12)

    def test_hand_case_minus_one_third(self):
        report = fleiss_kappa([[2, 1], [1, 2]])
        assert report.kappa == pytest.approx(-1 / 3, abs=1e-9)

    def test_matches_oracle_on_paper_dimensions(self):
        rng = random.Random(4515)
        counts = []
        for _ in range(45):
            row = [0, 0, 0]
            for _ in range(15):
                row[rng.randrange(3)] += 1
            counts.append(row)
        report = fleiss_kappa(counts)
        assert report.kappa == pytest.approx(fleiss_oracle(counts), abs=1e-9)
        assert (report.n_subjects, report.n_raters, report.n_categories) == (45, 15, 3)

    def test_column_permutation_invariance(self):
        rng = random.Random(8)
        counts = []
        for _ in range(12):
            row = [0, 0, 0, 0]
            for _ in range(6):
                row[rng.randrange(4)] += 1
            counts.append(row)
        baseline = fleiss_kappa(counts).kappa
        for permutation in itertools.permutations(range(4)):
            permuted = [[row[j] for j in permutation] for row in counts]
            assert fleiss_kappa(permuted).kappa == pytest.approx(baseline, abs=1e-12)

    def test_two_rater_cohen_style_check(self):
        rng = random.Random(21)
        for _ in range(25):
            counts = []
            for _ in range(30):
                row = [0, 0, 0]
                for _ in range(2):
                    row[rng.randrange(3)] += 1
                counts.append(row)
            totals = [sum(row[j] for row in counts) for j in range(3)]
            if sum(1 for t in totals if t) < 2:
                continue
            assert fleiss_kappa(counts).kappa == pytest.approx(
                cohen_style_two_rater(counts), abs=1e-9
            )

    def test_ragged_matrix(self):
        with pytest.raises(RaggedMatrix):
            fleiss_kappa([[2, 1], [1, 1]])

    def test_single_rater_rejected(self):
        with pytest.raises(RaggedMatrix):
            fleiss_kappa([[1, 0], [0, 1]])

    def test_degenerate_single_category(self):
        with pytest.raises(DegenerateAgreement):
            fleiss_kappa([[3, 0], [3, 0]])

    def test_significance_fields(self):
        report = fleiss_kappa([[2, 1], [1, 2]])
        assert report.z < 0
        assert 0.0 <= report.p_value <= 1.0


class TestInternalSummary:
    def make_rating(self, rater, line, round_number, *, present=True, correct=True,
                    flag=False, additional=None):
        return InternalRating(
            rater_id=rater, example_id="ex", line_number=line, round=round_number,
            correct=correct,
            relevant=flag if present else None,
            hallucination=flag if not present else None,
            additional_info=additional,
        )

    def test_single_rater_all_correct(self):
        ratings = [
            self.make_rating("r1", line, 1, present=True, correct=True)
            for line in range(1, 6)
        ]
        table = internal_rating_summary(ratings)
        stats = table["description_present"][1]["correctness"]
        assert stats == {"min": 100.0, "max": 100.0, "average": 100.0}

    def test_min_max_average_across_raters(self):
        ratings = []
        for line in range(1, 5):
            ratings.append(self.make_rating("r1", line, 1, correct=True))
        for line in range(1, 5):
            ratings.append(self.make_rating("r2", line, 1, correct=(line <= 2)))
        stats = internal_rating_summary(ratings)["description_present"][1]["correctness"]
        assert stats["min"] == pytest.approx(50.0)
        assert stats["max"] == pytest.approx(100.0)
        assert stats["average"] == pytest.approx(75.0)

    def test_condition_split_and_metrics(self):
        ratings = [
            self.make_rating("r1", 1, 2, present=True, additional=True),
            self.make_rating("r1", 2, 2, present=True, additional=False),
            self.make_rating("r1", 1, 2, present=False, flag=True, additional=True),
        ]
        table = internal_rating_summary(ratings)
        assert table["description_present"][2]["additional_info"]["average"] == pytest.approx(50.0)
        assert "hallucination" in table["description_absent"][2]
        assert "relevance" not in table["description_absent"][2]

    def test_same_line_under_both_conditions_is_normal(self):
        # the two generation runs cover the same lines; one call handles both
        ratings = [
            self.make_rating("r1", 1, 1, present=True),
            self.make_rating("r1", 1, 1, present=False),
        ]
        table = internal_rating_summary(ratings)
        assert set(table) == {"description_present", "description_absent"}

    def test_contradictory_duplicate_judgment_rejected(self):
        ratings = [
            self.make_rating("r1", 1, 1, present=True, correct=True),
            self.make_rating("r1", 1, 1, present=True, correct=False),
        ]
        with pytest.raises(MixedConditionLine):
            internal_rating_summary(ratings)

    def test_rows_render_min_max_average(self):
        from weat.evaluation import render_internal_text

        ratings = [self.make_rating("r1", 1, 1)]
        text = render_internal_text(internal_rating_summary(ratings))
        for label in ("Min", "Max", "Average"):
            assert label in text

    def test_additional_info_round1_rejected(self):
        with pytest.raises(ValueError):
            self.make_rating("r1", 1, 1, additional=True)

    def test_both_condition_flags_rejected(self):
        with pytest.raises(ValueError):
            InternalRating(
                rater_id="r", example_id="e", line_number=1, round=1,
                correct=True, relevant=True, hallucination=False,
            )


class TestRatingsCsv:
    def test_parse_and_validate(self):
        text = (
            "evaluator_id,group,example_id,line,completeness_a,completeness_b,preference\n"
            "e00,students,ex0,1,2,1,0\n"
            "e01,authors,ex0,1,1,1,2\n"
        )
        records = parse_ratings_csv(text)
        assert len(records) == 2
        assert records[0].completeness_a == 2

    def test_bad_scale_rejects_whole_file(self):
        text = (
            "evaluator_id,group,example_id,line,completeness_a,completeness_b,preference\n"
            "e00,students,ex0,1,2,1,0\n"
            "e01,authors,ex0,1,5,1,2\n"
        )
        with pytest.raises(RatingIngestError):
            parse_ratings_csv(text)

    def test_wrong_header_rejected(self):
        with pytest.raises(RatingIngestError):
            parse_ratings_csv("a,b,c\n1,2,3\n")
