"""Study result tables: rating distributions, summary statistics, and the
internal prompt-tuning summary.

External ratings are blinded (slots A/B); every function here first joins
each rating to its sheet item and maps slot judgments back to sources
(generated vs expert). Percentages are computed over (line x evaluator)
observations and each distribution row sums to 100. Renderers produce both
CSV and aligned-text layouts.
"""

from __future__ import annotations

import csv
import io
import statistics
from collections import defaultdict
from dataclasses import dataclass
from typing import Sequence

from ..errors import WeatError
from .ratings import InternalRating, RatingRecord
from .sheets import ComparisonSheet, EXPERT, GENERATED

SOURCES = (GENERATED, EXPERT)
GROUP_ORDER = ("students", "authors", "overall")
GROUP_LABELS = {"students": "Students", "authors": "Authors", "overall": "Overall"}
SOURCE_LABELS = {GENERATED: "Generated", EXPERT: "Expert"}
COMPLETENESS_LABELS = {0: "Not complete=0", 1: "Complete=1", 2: "Very complete=2"}
PREFERENCE_CATEGORIES = ("same", "expert", "generated")
PREFERENCE_LABELS = {
    "same": "Both are the same = 0",
    "expert": "Expert is better = 1",
    "generated": "Generated is better = 2",
}
SUMMARY_METRICS = ("generated_completeness", "expert_completeness", "preference")
SUMMARY_METRIC_LABELS = {
    "generated_completeness": "Generated completeness",
    "expert_completeness": "Expert completeness",
    "preference": "Which is better?",
}
SUMMARY_GROUPS = ("all", "students", "authors")
SUMMARY_GROUP_LABELS = {"all": "All", "students": "Students", "authors": "Authors"}


class OrphanRating(WeatError):
    pass


class EmptyCell(WeatError):
    pass


class MixedConditionLine(WeatError):
    pass


@dataclass
class Observation:
    """One rating with slots resolved back to their sources."""

    evaluator_id: str
    group: str
    example_id: str
    line_number: int
    completeness: dict[str, int]
    preference: str
    preference_value: int


def unblind_preference(preference: int, assignment: dict[str, str]) -> str:
    """Map a slot preference (0/1/2) to a source category."""
    if preference == 0:
        return "same"
    slot = "A" if preference == 1 else "B"
    return assignment[slot]


def blind_preference(category: str, assignment: dict[str, str]) -> int:
    """Map a source category back to the slot preference; inverse of
    :func:`unblind_preference` for the same assignment."""
    if category == "same":
        return 0
    return 1 if assignment["A"] == category else 2


_PREFERENCE_VALUE = {"same": 0, "expert": 1, "generated": 2}


def join_observations(
    ratings: Sequence[RatingRecord], sheets: Sequence[ComparisonSheet]
) -> list[Observation]:
    """Resolve each rating against its evaluator's sheet.

    Raises:
        OrphanRating: A rating without a matching sheet item.
    """
    index: dict[tuple[str, str, int], dict[str, str]] = {}
    for sheet in sheets:
        for item in sheet.items:
            index[(sheet.evaluator_id, item.example_id, item.line_number)] = (
                item.assignment
            )
    observations = []
    for rating in ratings:
        key = (rating.evaluator_id, rating.example_id, rating.line_number)
        assignment = index.get(key)
        if assignment is None:
            raise OrphanRating(
                f"no sheet item for evaluator {rating.evaluator_id!r}, "
                f"example {rating.example_id!r}, line {rating.line_number}"
            )
        completeness = {
            assignment["A"]: rating.completeness_a,
            assignment["B"]: rating.completeness_b,
        }
        category = unblind_preference(rating.preference, assignment)
        observations.append(
            Observation(
                evaluator_id=rating.evaluator_id,
                group=rating.evaluator_group,
                example_id=rating.example_id,
                line_number=rating.line_number,
                completeness=completeness,
                preference=category,
                preference_value=_PREFERENCE_VALUE[category],
            )
        )
    return observations


def _percentages(counts: dict, keys: Sequence) -> dict:
    total = sum(counts.get(key, 0) for key in keys)
    return {key: 100.0 * counts.get(key, 0) / total for key in keys}


def completeness_distribution(
    ratings: Sequence[RatingRecord], sheets: Sequence[ComparisonSheet]
) -> dict[str, dict[str, dict[int, float]]]:
    """Completeness rating distribution per source and evaluator group.

    Returns ``table[source][group][value] = percentage`` with groups
    students/authors/overall; groups without observations are omitted.
    """
    observations = join_observations(ratings, sheets)
    counts: dict[tuple[str, str, int], int] = defaultdict(int)
    groups_seen: set[str] = set()
    for observation in observations:
        groups_seen.add(observation.group)
        for source in SOURCES:
            value = observation.completeness[source]
            counts[(source, observation.group, value)] += 1
            counts[(source, "overall", value)] += 1
    groups = [g for g in GROUP_ORDER if g in groups_seen or (g == "overall" and groups_seen)]
    table: dict[str, dict[str, dict[int, float]]] = {}
    for source in SOURCES:
        table[source] = {}
        for group in groups:
            row = {value: counts.get((source, group, value), 0) for value in (0, 1, 2)}
            if sum(row.values()) == 0:
                continue
            table[source][group] = _percentages(row, (0, 1, 2))
    return table


def preference_distribution(
    ratings: Sequence[RatingRecord], sheets: Sequence[ComparisonSheet]
) -> dict[str, dict[str, float]]:
    """Which-is-better distribution per evaluator group.

    Returns ``table[group][category] = percentage`` with categories
    same/expert/generated, after un-blinding slot preferences.
    """
    observations = join_observations(ratings, sheets)
    counts: dict[tuple[str, str], int] = defaultdict(int)
    groups_seen: set[str] = set()
    for observation in observations:
        groups_seen.add(observation.group)
        counts[(observation.group, observation.preference)] += 1
        counts[("overall", observation.preference)] += 1
    groups = [g for g in GROUP_ORDER if g in groups_seen or (g == "overall" and groups_seen)]
    table: dict[str, dict[str, float]] = {}
    for group in groups:
        row = {
            category: counts.get((group, category), 0)
            for category in PREFERENCE_CATEGORIES
        }
        if sum(row.values()) == 0:
            continue
        table[group] = _percentages(row, PREFERENCE_CATEGORIES)
    return table


def _mean_stdev(values: list[int]) -> tuple[float, float]:
    mean = statistics.fmean(values)
    stdev = statistics.stdev(values) if len(values) > 1 else 0.0
    return mean, stdev


def mean_stdev_summary(
    ratings: Sequence[RatingRecord], sheets: Sequence[ComparisonSheet]
) -> dict[str, dict[str, tuple[float, float]]]:
    """Mean and sample standard deviation per metric and group.

    Metrics: completeness of the generated and the expert explanation, and
    the un-blinded preference value (0 same, 1 expert better, 2 generated
    better). Groups: all/students/authors. Sample (n-1) standard deviation;
    a single-observation cell reports stdev 0.0.

    Raises:
        EmptyCell: A metric x group cell has no ratings.
    """
    observations = join_observations(ratings, sheets)
    values: dict[tuple[str, str], list[int]] = defaultdict(list)
    for observation in observations:
        for group in ("all", observation.group):
            values[("generated_completeness", group)].append(
                observation.completeness[GENERATED]
            )
            values[("expert_completeness", group)].append(
                observation.completeness[EXPERT]
            )
            values[("preference", group)].append(observation.preference_value)
    table: dict[str, dict[str, tuple[float, float]]] = {}
    for metric in SUMMARY_METRICS:
        table[metric] = {}
        for group in SUMMARY_GROUPS:
            cell = values.get((metric, group))
            if not cell:
                raise EmptyCell(f"no ratings for {metric} in group {group!r}")
            table[metric][group] = _mean_stdev(cell)
    return table


def internal_rating_summary(
    ratings: Sequence[InternalRating],
) -> dict[str, dict[int, dict[str, dict[str, float]]]]:
    """Min/max/average of per-rater percentages, per condition and round.

    For every rater the fraction of rated lines judged correct (and
    relevant, hallucinated, or carrying additional information, where
    applicable) is computed per round; the table reports the minimum,
    maximum, and average of those percentages across raters, separately for
    the description-present and description-absent conditions. One call
    handles both conditions at once: the same line legitimately appears
    under both (the two generation runs), each record carrying its own
    condition flag.

    Raises:
        MixedConditionLine: Contradictory judgments of one line: the same
            (rater, example, line, round) appears more than once within a
            single condition.
    """
    seen: set[tuple[str, str, int, int, str]] = set()
    for rating in ratings:
        key = (
            rating.rater_id,
            rating.example_id,
            rating.line_number,
            rating.round,
            rating.condition,
        )
        if key in seen:
            raise MixedConditionLine(
                f"rater {rating.rater_id!r} rated example {rating.example_id!r} "
                f"line {rating.line_number} round {rating.round} twice under "
                f"the {rating.condition} condition"
            )
        seen.add(key)

    flag_lists: dict[tuple[str, int, str, str], list[bool]] = defaultdict(list)
    for rating in ratings:
        condition = rating.condition
        rater = rating.rater_id
        flag_lists[(condition, rating.round, "correctness", rater)].append(
            rating.correct
        )
        if rating.relevant is not None:
            flag_lists[(condition, rating.round, "relevance", rater)].append(
                rating.relevant
            )
        if rating.hallucination is not None:
            flag_lists[(condition, rating.round, "hallucination", rater)].append(
                rating.hallucination
            )
        if rating.additional_info is not None:
            flag_lists[(condition, rating.round, "additional_info", rater)].append(
                rating.additional_info
            )

    per_rater: dict[tuple[str, int, str], list[float]] = defaultdict(list)
    for (condition, round_number, metric, _rater), flags in sorted(flag_lists.items()):
        per_rater[(condition, round_number, metric)].append(
            100.0 * sum(flags) / len(flags)
        )

    table: dict[str, dict[int, dict[str, dict[str, float]]]] = {}
    for (condition, round_number, metric), percentages in sorted(per_rater.items()):
        table.setdefault(condition, {}).setdefault(round_number, {})[metric] = {
            "min": min(percentages),
            "max": max(percentages),
            "average": sum(percentages) / len(percentages),
        }
    return table


# Renderers --------------------------------------------------------------


def _format_pct(value: float) -> str:
    return f"{value:.2f}"


def render_completeness_csv(table: dict) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(["source", "group", "not_complete", "complete", "very_complete"])
    for source in SOURCES:
        for group, row in table.get(source, {}).items():
            writer.writerow(
                [source, group] + [_format_pct(row[value]) for value in (0, 1, 2)]
            )
    return buffer.getvalue()


def render_completeness_text(table: dict) -> str:
    header_cells = [COMPLETENESS_LABELS[value] for value in (0, 1, 2)]
    lines = ["Is the explanation sufficiently complete? (% of ratings)"]
    lines.append(
        f"{'':24}" + "".join(f"{cell:>18}" for cell in header_cells)
    )
    for source in SOURCES:
        if source not in table or not table[source]:
            continue
        lines.append(SOURCE_LABELS[source])
        for group, row in table[source].items():
            label = "  " + GROUP_LABELS[group]
            cells = "".join(f"{_format_pct(row[value]):>17}%" for value in (0, 1, 2))
            lines.append(f"{label:<24}" + cells)
    return "\n".join(lines) + "\n"


def render_preference_csv(table: dict) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(["group", "both_same", "expert_better", "generated_better"])
    for group, row in table.items():
        writer.writerow(
            [group]
            + [_format_pct(row[category]) for category in PREFERENCE_CATEGORIES]
        )
    return buffer.getvalue()


def render_preference_text(table: dict) -> str:
    groups = [group for group in GROUP_ORDER if group in table]
    lines = ["Which explanation is better? (% of ratings)"]
    lines.append(
        f"{'Rating':<26}" + "".join(f"{GROUP_LABELS[g]:>12}" for g in groups)
    )
    for category in PREFERENCE_CATEGORIES:
        cells = "".join(f"{_format_pct(table[g][category]):>11}%" for g in groups)
        lines.append(f"{PREFERENCE_LABELS[category]:<26}" + cells)
    return "\n".join(lines) + "\n"


def render_summary_csv(table: dict) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(["metric", "group", "mean", "stdev"])
    for metric in SUMMARY_METRICS:
        for group in SUMMARY_GROUPS:
            mean, stdev = table[metric][group]
            writer.writerow([metric, group, f"{mean:.3f}", f"{stdev:.3f}"])
    return buffer.getvalue()


def render_summary_text(table: dict) -> str:
    lines = ["Average (stdev) ratings"]
    lines.append(
        f"{'Metric':<26}"
        + "".join(f"{SUMMARY_GROUP_LABELS[g]:>16}" for g in SUMMARY_GROUPS)
    )
    for metric in SUMMARY_METRICS:
        cells = []
        for group in SUMMARY_GROUPS:
            mean, stdev = table[metric][group]
            cells.append(f"{mean:.3f} ({stdev:.3f})")
        lines.append(
            f"{SUMMARY_METRIC_LABELS[metric]:<26}"
            + "".join(f"{cell:>16}" for cell in cells)
        )
    return "\n".join(lines) + "\n"


_INTERNAL_METRIC_ORDER = ("correctness", "relevance", "hallucination", "additional_info")
_INTERNAL_METRIC_LABELS = {
    "correctness": "Correct",
    "relevance": "Relevant",
    "hallucination": "Hallucination",
    "additional_info": "Additional info",
}
_CONDITION_LABELS = {
    "description_present": "description present",
    "description_absent": "description absent",
}


def render_internal_csv(table: dict) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(["condition", "round", "metric", "min", "max", "average"])
    for condition in sorted(table):
        for round_number in sorted(table[condition]):
            metrics = table[condition][round_number]
            for metric in _INTERNAL_METRIC_ORDER:
                if metric not in metrics:
                    continue
                stats = metrics[metric]
                writer.writerow(
                    [
                        condition,
                        round_number,
                        metric,
                        _format_pct(stats["min"]),
                        _format_pct(stats["max"]),
                        _format_pct(stats["average"]),
                    ]
                )
    return buffer.getvalue()


def render_internal_text(table: dict) -> str:
    blocks = []
    for condition in sorted(table):
        columns: list[tuple[int, str]] = []
        for round_number in sorted(table[condition]):
            for metric in _INTERNAL_METRIC_ORDER:
                if metric in table[condition][round_number]:
                    columns.append((round_number, metric))
        lines = [f"Internal ratings, {_CONDITION_LABELS.get(condition, condition)}"]
        lines.append(
            f"{'':<10}"
            + "".join(
                f"{f'R{round_number} {_INTERNAL_METRIC_LABELS[metric]}':>20}"
                for round_number, metric in columns
            )
        )
        for row_key, row_label in (("min", "Min"), ("max", "Max"), ("average", "Average")):
            cells = "".join(
                f"{_format_pct(table[condition][round_number][metric][row_key]):>19}%"
                for round_number, metric in columns
            )
            lines.append(f"{row_label:<10}" + cells)
        blocks.append("\n".join(lines))
    return "\n\n".join(blocks) + "\n"
