"""Shared fixtures: the Java example corpus and pipeline helpers."""

from __future__ import annotations

import sys
from datetime import datetime, timezone
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from weat.model import WorkedExample, create_example
from weat.prompting import PromptConfig
from weat.providers import ProviderSpec

FIXTURE_ROOT = Path(__file__).parent / "fixtures" / "examples"
EXAMPLE_NAMES = [
    "Initials",
    "JAdjacentDuplicates",
    "JArrayIncrementElements",
    "JArrayMax",
    "JPrintDigitsReverse",
    "JSearchArrayValues",
    "JSmallestDivisor",
    "PointTester",
]

FIXED_NOW = datetime(2024, 1, 15, 12, 0, 0, tzinfo=timezone.utc)


def fixture_example(name: str, *, now: datetime = FIXED_NOW) -> WorkedExample:
    directory = FIXTURE_ROOT / name
    return create_example(
        title=name,
        description=(directory / "description.txt").read_text("utf-8").strip(),
        source=(directory / "source.java").read_text("utf-8"),
        language_tag="java",
        example_id=name,
        now=now,
    )


def mock_provider(name: str) -> ProviderSpec:
    return ProviderSpec(kind="mock", fixture_path=FIXTURE_ROOT / name)


@pytest.fixture
def initials() -> WorkedExample:
    return fixture_example("Initials")


@pytest.fixture
def config() -> PromptConfig:
    return PromptConfig()


# Acceptance reporting: one printed line per criterion at the end of the run.

_ACCEPTANCE_REPORTS: dict[str, str] = {}


def pytest_runtest_logreport(report):
    if "test_acceptance" in report.nodeid and report.when == "call":
        _ACCEPTANCE_REPORTS[report.nodeid] = report.outcome


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _ACCEPTANCE_REPORTS:
        return
    terminalreporter.section("acceptance criteria")
    for nodeid in sorted(_ACCEPTANCE_REPORTS):
        outcome = _ACCEPTANCE_REPORTS[nodeid]
        label = "PASS" if outcome == "passed" else outcome.upper()
        terminalreporter.write_line(f"{label}  {nodeid.split('::')[-1]}")
