"""Worked-example authoring toolkit.

Collaborative authoring of line-by-line code explanations: iterative
generation through a chat-completion provider with author review before
anything sticks, round-novelty analysis, portable and PCEX-style exports,
and a study-evaluation harness (blind pairwise sheets, rating tables,
Fleiss' kappa).
"""

from .analysis import (
    MergePolicy,
    SimilarityReport,
    cosine_similarity,
    flag_structural_lines,
    merge_rounds,
    round_similarity,
    similarity_report_csv,
)
from .authoring import (
    GenerationJob,
    JobConflict,
    LineSelection,
    NoStagedJob,
    accept_staged,
    generate_for_example,
)
from .interchange import export_pcex, export_portable, import_portable
from .model import (
    ChallengeSpec,
    CodeLine,
    ExplanationLevel,
    Origin,
    WorkedExample,
    attach_explanation,
    create_example,
    edit_explanation,
    mark_challenge,
    validate,
)
from .prompting import PromptConfig, RoundPrompt, build_round_prompt, default_config, number_lines
from .providers import ProviderSpec, RetryPolicy, complete, parse_line_explanations
from .storage import ExampleStore
from .transcripts import GenerationTranscript, ParsedRound, RawCompletion

__version__ = "0.1.0"

__all__ = [
    "ChallengeSpec",
    "CodeLine",
    "ExampleStore",
    "ExplanationLevel",
    "GenerationJob",
    "GenerationTranscript",
    "JobConflict",
    "LineSelection",
    "MergePolicy",
    "NoStagedJob",
    "Origin",
    "ParsedRound",
    "PromptConfig",
    "ProviderSpec",
    "RawCompletion",
    "RetryPolicy",
    "RoundPrompt",
    "SimilarityReport",
    "WorkedExample",
    "accept_staged",
    "attach_explanation",
    "build_round_prompt",
    "complete",
    "cosine_similarity",
    "create_example",
    "default_config",
    "edit_explanation",
    "export_pcex",
    "export_portable",
    "flag_structural_lines",
    "generate_for_example",
    "import_portable",
    "mark_challenge",
    "merge_rounds",
    "number_lines",
    "parse_line_explanations",
    "round_similarity",
    "similarity_report_csv",
    "validate",
]
