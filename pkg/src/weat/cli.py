"""Command-line interface.

Subcommands mirror the library surface: ``example`` (create/import/list/
show/validate/delete), ``generate``, ``accept``, ``analyze`` (similarity/
structural), ``eval`` (sheets/kappa/report/internal), ``export``, and
``serve``. Exit codes: 0 success, 1 validation error, 2 provider/IO error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import authoring
from .analysis import flag_structural_lines, round_similarity, similarity_report_csv
from .config import load_settings, provider_spec_from_dict
from .errors import WeatError
from .evaluation import (
    build_sheets,
    fleiss_kappa,
    internal_rating_summary,
    load_internal_csv,
    load_ratings_csv,
    completeness_distribution,
    mean_stdev_summary,
    preference_distribution,
    render_completeness_csv,
    render_completeness_text,
    render_internal_csv,
    render_internal_text,
    render_preference_csv,
    render_preference_text,
    render_sheet_csv,
    render_sheet_markdown,
    render_summary_csv,
    render_summary_text,
    sheets_from_key_json,
    sheets_to_key_json,
)
from .interchange import export_pcex, export_portable, import_portable
from .model import create_example, validate
from .prompting import PromptConfig, build_round_prompt
from .providers import complete, parse_line_explanations
from .storage import ExampleStore
from .transcripts import GenerationTranscript, RawCompletion


def _read_text(path: str) -> str:
    return Path(path).read_text("utf-8")


def _write_or_print(text: str, out: str | None) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        Path(out).write_text(text, "utf-8")


def _load_example_arg(args) -> tuple:
    """Resolve (example, store_or_None) from --example/--id flags."""
    if getattr(args, "example", None):
        return import_portable(_read_text(args.example)), None
    if not getattr(args, "id", None) or not getattr(args, "storage_root", None):
        raise WeatError("provide --example FILE, or --id with --storage-root")
    store = ExampleStore(args.storage_root)
    example, _ = store.load(args.id)
    return example, store


def _provider_from_args(args):
    payload = {"kind": args.provider}
    if args.fixtures:
        payload["fixture_path"] = args.fixtures
    if getattr(args, "endpoint", None):
        payload["endpoint"] = args.endpoint
    return provider_spec_from_dict(payload)


def _config_from_args(args) -> PromptConfig:
    config = PromptConfig()
    if getattr(args, "model", None):
        config.model_id = args.model
    if getattr(args, "temperature", None) is not None:
        config.temperature = args.temperature
    if getattr(args, "max_rounds", None) is not None:
        config.max_rounds = args.max_rounds
    if getattr(args, "no_description", False):
        config.include_description = False
    if getattr(args, "role", None):
        config.role_name = args.role
    return config


# Subcommand handlers ------------------------------------------------------


def _cmd_example_create(args) -> int:
    description = args.description or ""
    if args.description_file:
        description = _read_text(args.description_file)
    example = create_example(
        args.title,
        description,
        _read_text(args.source),
        args.language,
        example_id=args.id,
    )
    if args.storage_root:
        store = ExampleStore(args.storage_root)
        revision = store.store(example)
        print(f"stored {example.id} revision {revision}")
    else:
        _write_or_print(export_portable(example), args.out)
    return 0


def _cmd_example_import(args) -> int:
    example = import_portable(_read_text(args.file))
    store = ExampleStore(args.storage_root)
    revision = store.store(example)
    print(f"stored {example.id} revision {revision}")
    return 0


def _cmd_example_list(args) -> int:
    store = ExampleStore(args.storage_root)
    summaries = store.list()
    if args.format == "json":
        print(
            json.dumps(
                [
                    {
                        "id": s.id,
                        "title": s.title,
                        "language_tag": s.language_tag,
                        "line_count": s.line_count,
                        "updated_at": s.updated_at.isoformat(),
                        "revision": s.revision,
                    }
                    for s in summaries
                ],
                indent=2,
            )
        )
    else:
        for s in summaries:
            print(f"{s.id}\t{s.title}\t{s.line_count} lines\trev {s.revision}")
    return 0


def _cmd_example_show(args) -> int:
    example, _ = _load_example_arg(args)
    sys.stdout.write(export_portable(example))
    return 0


def _cmd_example_validate(args) -> int:
    example, _ = _load_example_arg(args)
    violations = validate(example)
    for violation in violations:
        print(violation)
    if violations:
        return 1
    print("valid")
    return 0


def _cmd_example_delete(args) -> int:
    ExampleStore(args.storage_root).delete(args.id)
    print(f"deleted {args.id}")
    return 0


def _cmd_generate(args) -> int:
    config = _config_from_args(args)
    provider = _provider_from_args(args)
    if args.example:
        example = import_portable(_read_text(args.example))
        transcript = GenerationTranscript(example_id=example.id)
        for round_number in range(1, config.max_rounds + 1):
            prompt = build_round_prompt(example, config, transcript)
            raw = complete(prompt, provider, config)
            parsed = parse_line_explanations(raw, len(example.lines))
            transcript.add_round(raw, parsed)
        report = round_similarity(transcript.parsed_rounds, example.id)
        if args.format == "text":
            for parsed in transcript.parsed_rounds:
                print(f"round {parsed.round}: {len(parsed.by_line)} explanations, "
                      f"{len(parsed.dropped)} dropped")
                for number in sorted(parsed.by_line):
                    print(f"  {number}: {parsed.by_line[number]}")
        sys.stdout.write(similarity_report_csv(report, config.max_rounds))
        return 0

    if not args.id or not args.storage_root:
        raise WeatError("provide --example FILE, or --id with --storage-root")
    store = ExampleStore(args.storage_root)
    job = authoring.generate_for_example(store, args.id, config, provider)
    if args.format == "text":
        print(f"job {job.status}, rounds done: {job.rounds_done}")
        for parsed in job.staged_rounds:
            print(f"round {parsed.round}: {len(parsed.by_line)} explanations, "
                  f"{len(parsed.dropped)} dropped")
    assert job.similarity is not None
    sys.stdout.write(similarity_report_csv(job.similarity, config.max_rounds))
    return 0


def _cmd_accept(args) -> int:
    store = ExampleStore(args.storage_root)
    selections = None
    if args.selections:
        payload = json.loads(_read_text(args.selections))
        selections = {
            int(line): authoring.LineSelection(
                include=entry.get("include", True),
                edits={int(r): text for r, text in entry.get("edits", {}).items()},
            )
            for line, entry in payload.items()
        }
    example = authoring.accept_staged(store, args.id, selections)
    print(f"accepted {example.id} revision {store.revision(example.id)}")
    return 0


def _cmd_analyze_similarity(args) -> int:
    example = import_portable(_read_text(args.example))
    transcript_dir = Path(args.transcript)
    rounds = []
    round_number = 1
    while (transcript_dir / f"round-{round_number}.txt").is_file():
        text = (transcript_dir / f"round-{round_number}.txt").read_text("utf-8")
        raw = RawCompletion(
            round=round_number, request_digest="", response_text=text
        )
        rounds.append(parse_line_explanations(raw, len(example.lines)))
        round_number += 1
    if not rounds:
        raise WeatError(f"no round-<r>.txt files under {transcript_dir}")
    report = round_similarity(rounds, example.id)
    sys.stdout.write(similarity_report_csv(report, args.rounds))
    return 0


def _cmd_analyze_structural(args) -> int:
    example, _ = _load_example_arg(args)
    flagged = flag_structural_lines(example)
    for number in sorted(flagged):
        print(f"{number}: {example.lines[number - 1].text}")
    return 0


def _cmd_eval_sheets(args) -> int:
    examples = [import_portable(_read_text(path)) for path in args.examples]
    sheets = build_sheets(examples, args.evaluators, args.seed, levels=args.levels)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for sheet in sheets:
        stem = f"{sheet.sheet_id}-{sheet.evaluator_id}"
        (out / f"{stem}.md").write_text(render_sheet_markdown(sheet), "utf-8")
        (out / f"{stem}.csv").write_text(render_sheet_csv(sheet), "utf-8")
    (out / "sheets-key.json").write_text(sheets_to_key_json(sheets), "utf-8")
    print(
        f"wrote {len(sheets)} sheets ({len(sheets[0].items)} items each) to {out}"
    )
    return 0


def _cmd_eval_kappa(args) -> int:
    ratings = load_ratings_csv(args.ratings)
    lines: dict[tuple[str, int], list[int]] = {}
    for rating in ratings:
        lines.setdefault((rating.example_id, rating.line_number), []).append(
            rating.preference
        )
    counts = [
        [values.count(category) for category in (0, 1, 2)]
        for _, values in sorted(lines.items())
    ]
    report = fleiss_kappa(counts)
    print(
        f"κ={report.kappa:.3f} z={report.z:.3f} p={report.p_value:.4g} "
        f"subjects={report.n_subjects} raters={report.n_raters} "
        f"categories={report.n_categories}"
    )
    return 0


def _cmd_eval_report(args) -> int:
    ratings = load_ratings_csv(args.ratings)
    sheets = sheets_from_key_json(_read_text(args.key))
    if args.table == "completeness":
        table = completeness_distribution(ratings, sheets)
        render = render_completeness_csv if args.format == "csv" else render_completeness_text
    elif args.table == "preference":
        table = preference_distribution(ratings, sheets)
        render = render_preference_csv if args.format == "csv" else render_preference_text
    else:
        table = mean_stdev_summary(ratings, sheets)
        render = render_summary_csv if args.format == "csv" else render_summary_text
    sys.stdout.write(render(table))
    return 0


def _cmd_eval_internal(args) -> int:
    ratings = load_internal_csv(args.ratings)
    table = internal_rating_summary(ratings)
    render = render_internal_csv if args.format == "csv" else render_internal_text
    sys.stdout.write(render(table))
    return 0


def _cmd_export(args) -> int:
    example, _ = _load_example_arg(args)
    document = export_portable(example) if args.format == "portable" else export_pcex(example)
    _write_or_print(document, args.out)
    return 0


def _cmd_serve(args) -> int:
    from .service import serve

    settings = load_settings(args.config)
    if args.storage_root:
        settings.storage_root = Path(args.storage_root)
    if args.listen:
        host, _, port = args.listen.rpartition(":")
        settings.host, settings.port = host, int(port)
    if args.provider:
        settings.provider["kind"] = args.provider
    if args.fixtures:
        settings.provider["fixture_path"] = args.fixtures
    if args.static_dir:
        settings.static_dir = Path(args.static_dir)
    serve(settings)
    return 0


# Parser -------------------------------------------------------------------


def _add_storage_or_file(parser, *, require_storage: bool = False) -> None:
    parser.add_argument("--storage-root", help="storage directory")
    if not require_storage:
        parser.add_argument("--example", help="portable example document (*.weat.json)")
    parser.add_argument("--id", help="stored example id")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="weat",
        description="Worked-example authoring toolkit.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    example = sub.add_parser("example", help="create, import, and manage examples")
    example_sub = example.add_subparsers(dest="subcommand", required=True)

    p = example_sub.add_parser("create", help="create an example from source code")
    p.add_argument("--title", required=True)
    p.add_argument("--source", required=True, help="source code file")
    p.add_argument("--description", default="")
    p.add_argument("--description-file")
    p.add_argument("--language", default="java")
    p.add_argument("--id")
    p.add_argument("--storage-root")
    p.add_argument("--out", help="write portable document here instead of storing")
    p.set_defaults(func=_cmd_example_create)

    p = example_sub.add_parser("import", help="import a portable document")
    p.add_argument("--file", required=True)
    p.add_argument("--storage-root", required=True)
    p.set_defaults(func=_cmd_example_import)

    p = example_sub.add_parser("list", help="list stored examples")
    p.add_argument("--storage-root", required=True)
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.set_defaults(func=_cmd_example_list)

    p = example_sub.add_parser("show", help="print a stored example")
    _add_storage_or_file(p)
    p.set_defaults(func=_cmd_example_show)

    p = example_sub.add_parser("validate", help="report invariant violations")
    _add_storage_or_file(p)
    p.set_defaults(func=_cmd_example_validate)

    p = example_sub.add_parser("delete", help="delete a stored example")
    p.add_argument("--storage-root", required=True)
    p.add_argument("--id", required=True)
    p.set_defaults(func=_cmd_example_delete)

    p = sub.add_parser("generate", help="run generation rounds")
    _add_storage_or_file(p)
    p.add_argument(
        "--provider", choices=("mock", "live", "replay"), default="mock"
    )
    p.add_argument("--fixtures", help="fixture directory (mock/replay/recording)")
    p.add_argument("--endpoint", help="chat-completion endpoint (live)")
    p.add_argument("--model")
    p.add_argument("--temperature", type=float)
    p.add_argument("--max-rounds", type=int)
    p.add_argument("--no-description", action="store_true")
    p.add_argument("--role")
    p.add_argument("--format", choices=("text", "csv"), default="text")
    p.set_defaults(func=_cmd_generate)

    p = sub.add_parser("accept", help="accept staged explanations")
    p.add_argument("--storage-root", required=True)
    p.add_argument("--id", required=True)
    p.add_argument(
        "--selections",
        help="JSON file of per-line decisions; omit to accept everything",
    )
    p.set_defaults(func=_cmd_accept)

    analyze = sub.add_parser("analyze", help="round similarity and structural lines")
    analyze_sub = analyze.add_subparsers(dest="subcommand", required=True)

    p = analyze_sub.add_parser("similarity", help="score recorded transcript rounds")
    p.add_argument("--example", required=True)
    p.add_argument("--transcript", required=True, help="directory of round-<r>.txt")
    p.add_argument("--rounds", type=int, help="planned rounds (for -- markers)")
    p.set_defaults(func=_cmd_analyze_similarity)

    p = analyze_sub.add_parser("structural", help="flag structural lines")
    _add_storage_or_file(p)
    p.set_defaults(func=_cmd_analyze_structural)

    evaluate = sub.add_parser("eval", help="study sheets, ratings, and reports")
    eval_sub = evaluate.add_subparsers(dest="subcommand", required=True)

    p = eval_sub.add_parser("sheets", help="build blinded comparison sheets")
    p.add_argument("--examples", nargs="+", required=True)
    p.add_argument("--evaluators", nargs="+", required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--levels", choices=("all", "first"), default="all")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_eval_sheets)

    p = eval_sub.add_parser("kappa", help="inter-rater agreement on preferences")
    p.add_argument("--ratings", required=True)
    p.set_defaults(func=_cmd_eval_kappa)

    p = eval_sub.add_parser("report", help="distribution and summary tables")
    p.add_argument("--ratings", required=True)
    p.add_argument("--key", required=True, help="sheets-key.json from eval sheets")
    p.add_argument(
        "--table",
        choices=("completeness", "preference", "summary"),
        required=True,
    )
    p.add_argument("--format", choices=("text", "csv"), default="text")
    p.set_defaults(func=_cmd_eval_report)

    p = eval_sub.add_parser("internal", help="internal rating summary")
    p.add_argument("--ratings", required=True)
    p.add_argument("--format", choices=("text", "csv"), default="text")
    p.set_defaults(func=_cmd_eval_internal)

    p = sub.add_parser("export", help="export portable or PCEX-style documents")
    _add_storage_or_file(p)
    p.add_argument("--format", choices=("portable", "pcex"), default="portable")
    p.add_argument("--out")
    p.set_defaults(func=_cmd_export)

    p = sub.add_parser("serve", help="run the authoring service")
    p.add_argument("--config", help="JSON config file")
    p.add_argument("--storage-root")
    p.add_argument("--listen", help="host:port")
    p.add_argument("--provider", choices=("mock", "live", "replay"))
    p.add_argument("--fixtures")
    p.add_argument("--static-dir", help="directory of frontend assets to serve")
    p.set_defaults(func=_cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except WeatError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
