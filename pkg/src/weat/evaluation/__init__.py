"""Study evaluation harness: blind comparison sheets, rating ingestion,
distribution tables, and inter-rater agreement."""

from .agreement import AgreementReport, DegenerateAgreement, RaggedMatrix, fleiss_kappa
from .ratings import (
    EXTERNAL_HEADER,
    INTERNAL_HEADER,
    InternalRating,
    RatingIngestError,
    RatingRecord,
    load_internal_csv,
    load_ratings_csv,
    parse_internal_csv,
    parse_ratings_csv,
)
from .sheets import (
    ComparisonSheet,
    NoComparableLines,
    SheetItem,
    build_sheets,
    filter_comparable,
    line_side_texts,
    render_sheet_csv,
    render_sheet_markdown,
    sheets_from_key_json,
    sheets_to_key_json,
)
from .tables import (
    EmptyCell,
    MixedConditionLine,
    Observation,
    OrphanRating,
    blind_preference,
    completeness_distribution,
    internal_rating_summary,
    join_observations,
    mean_stdev_summary,
    preference_distribution,
    render_completeness_csv,
    render_completeness_text,
    render_internal_csv,
    render_internal_text,
    render_preference_csv,
    render_preference_text,
    render_summary_csv,
    render_summary_text,
    unblind_preference,
)

__all__ = [
    "AgreementReport",
    "ComparisonSheet",
    "DegenerateAgreement",
    "EXTERNAL_HEADER",
    "EmptyCell",
    "INTERNAL_HEADER",
    "InternalRating",
    "MixedConditionLine",
    "NoComparableLines",
    "Observation",
    "OrphanRating",
    "RaggedMatrix",
    "RatingIngestError",
    "RatingRecord",
    "SheetItem",
    "blind_preference",
    "build_sheets",
    "completeness_distribution",
    "filter_comparable",
    "fleiss_kappa",
    "internal_rating_summary",
    "join_observations",
    "line_side_texts",
    "load_internal_csv",
    "load_ratings_csv",
    "mean_stdev_summary",
    "parse_internal_csv",
    "parse_ratings_csv",
    "preference_distribution",
    "render_completeness_csv",
    "render_completeness_text",
    "render_internal_csv",
    "render_internal_text",
    "render_preference_csv",
    "render_preference_text",
    "render_sheet_csv",
    "render_sheet_markdown",
    "render_summary_csv",
    "render_summary_text",
    "sheets_from_key_json",
    "sheets_to_key_json",
    "unblind_preference",
]
