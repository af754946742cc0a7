"""HTTP+JSON authoring service.

Exposes the authoring loop under ``/api/v1``: example CRUD, asynchronous
generation jobs with status polling, staged-explanation acceptance, manual
explanation editing, challenge marking, and document export. Mutating
endpoints carry a revision for optimistic concurrency; a stale revision is
a 409, as is starting a second generation while one is pending review.
"""

from __future__ import annotations

import json
import threading

from fastapi import FastAPI, Query, Response
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from . import authoring
from .analysis import flag_structural_lines
from .authoring import GenerationJob, JobConflict, LineSelection, NoStagedJob
from .config import ServiceSettings
from .errors import WeatError
from .interchange import export_pcex, export_portable
from .model import (
    LineOutOfRange,
    Origin,
    WorkedExample,
    attach_explanation,
    create_example,
    edit_explanation,
    mark_challenge,
)
from .prompting import TEMPLATE_SLOTS, PromptConfig, load_template
from .storage import ExampleStore, NotFound, VersionConflict


class CreateExampleBody(BaseModel):
    title: str
    source: str
    description: str = ""
    language_tag: str = "java"
    id: str | None = None


class GenerateBody(BaseModel):
    config: dict = Field(default_factory=dict)
    provider: dict | None = None


class SelectionBody(BaseModel):
    include: bool = True
    edits: dict[int, str] = Field(default_factory=dict)


class AcceptBody(BaseModel):
    selections: dict[int, SelectionBody] | None = None


class PatchExplanationBody(BaseModel):
    text: str
    revision: int


class ChallengeBody(BaseModel):
    distractors: list[str]
    prompt_hint: str | None = None
    revision: int


def _example_payload(example: WorkedExample, revision: int) -> dict:
    return {"example": json.loads(export_portable(example)), "revision": revision}


def _job_payload(job: GenerationJob) -> dict:
    return {"job": job.to_dict()}


def create_app(settings: ServiceSettings | None = None) -> FastAPI:
    """Build the service application around a file-backed store."""
    settings = settings or ServiceSettings()
    store = ExampleStore(settings.storage_root)
    app = FastAPI(title="weat authoring service", version="1")
    app.state.store = store
    app.state.settings = settings

    @app.exception_handler(WeatError)
    def _weat_error(request, exc: WeatError):
        if isinstance(exc, NotFound):
            status = 404
        elif isinstance(exc, (JobConflict, VersionConflict)):
            status = 409
        else:
            status = 422
        return JSONResponse(
            status_code=status,
            content={"error": type(exc).__name__, "detail": str(exc)},
        )

    @app.get("/healthz")
    def healthz():
        return {"status": "ok"}

    @app.post("/api/v1/examples", status_code=201)
    def create(body: CreateExampleBody):
        example = create_example(
            body.title,
            body.description,
            body.source,
            body.language_tag,
            example_id=body.id,
        )
        flag_structural_lines(example)  # advisory markers for the editor
        revision = store.store(example)
        return _example_payload(example, revision)

    @app.get("/api/v1/templates")
    def templates():
        return {slot: load_template(slot) for slot in TEMPLATE_SLOTS}

    @app.get("/api/v1/examples")
    def list_examples():
        return {
            "examples": [
                {
                    "id": summary.id,
                    "title": summary.title,
                    "language_tag": summary.language_tag,
                    "line_count": summary.line_count,
                    "updated_at": summary.updated_at.isoformat(),
                    "revision": summary.revision,
                }
                for summary in store.list()
            ]
        }

    @app.get("/api/v1/examples/{example_id}")
    def get_example(example_id: str):
        example, revision = store.load(example_id)
        return _example_payload(example, revision)

    @app.delete("/api/v1/examples/{example_id}", status_code=204)
    def delete_example(example_id: str):
        store.delete(example_id)
        return Response(status_code=204)

    @app.post("/api/v1/examples/{example_id}/generate", status_code=202)
    def generate(example_id: str, body: GenerateBody):
        config = PromptConfig(**body.config)
        provider = settings.provider_spec(body.provider)
        job = authoring.begin_job(store, example_id)

        def _run() -> None:
            try:
                authoring.run_job(store, job, config, provider)
            except WeatError:
                pass  # job already persisted as failed with the error text

        thread = threading.Thread(
            target=_run, name=f"weat-generate-{example_id}", daemon=True
        )
        thread.start()
        return _job_payload(job)

    @app.get("/api/v1/examples/{example_id}/job")
    def job_status(example_id: str):
        if not store.exists(example_id):
            raise NotFound(f"no example with id {example_id!r}")
        job = authoring.load_job(store, example_id)
        if job is None:
            raise NotFound(f"no generation job for example {example_id!r}")
        return _job_payload(job)

    @app.post("/api/v1/examples/{example_id}/accept")
    def accept(example_id: str, body: AcceptBody):
        selections = None
        if body.selections is not None:
            selections = {
                line: LineSelection(include=sel.include, edits=dict(sel.edits))
                for line, sel in body.selections.items()
            }
        example = authoring.accept_staged(store, example_id, selections)
        return _example_payload(example, store.revision(example_id))

    @app.patch("/api/v1/examples/{example_id}/lines/{line}/explanations/{level}")
    def patch_explanation(
        example_id: str, line: int, level: int, body: PatchExplanationBody
    ):
        with store.lock(example_id):
            example, revision = store.load(example_id)
            if body.revision != revision:
                raise VersionConflict(
                    f"example {example_id} is at revision {revision}, "
                    f"request expected {body.revision}"
                )
            existing_levels = len(example.line(line).explanations)
            if level <= existing_levels:
                example = edit_explanation(example, line, level, body.text)
            elif level == existing_levels + 1:
                example = attach_explanation(
                    example, line, body.text, origin=Origin.HUMAN
                )
            else:
                raise LineOutOfRange(
                    f"line {line} has {existing_levels} levels; "
                    f"cannot edit level {level}"
                )
            new_revision = store.store(example, expected_revision=revision)
        return _example_payload(example, new_revision)

    @app.post("/api/v1/examples/{example_id}/challenge/{line}")
    def challenge(example_id: str, line: int, body: ChallengeBody):
        with store.lock(example_id):
            example, revision = store.load(example_id)
            if body.revision != revision:
                raise VersionConflict(
                    f"example {example_id} is at revision {revision}, "
                    f"request expected {body.revision}"
                )
            example = mark_challenge(example, line, body.distractors, body.prompt_hint)
            new_revision = store.store(example, expected_revision=revision)
        return _example_payload(example, new_revision)

    @app.get("/api/v1/examples/{example_id}/export")
    def export(example_id: str, format: str = Query("portable")):
        example, _ = store.load(example_id)
        if format == "portable":
            document = export_portable(example)
        elif format == "pcex":
            document = export_pcex(example)
        else:
            raise WeatError(f"unknown export format {format!r}")
        return Response(content=document, media_type="application/json")

    if settings.static_dir is not None and settings.static_dir.is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount(
            "/", StaticFiles(directory=settings.static_dir, html=True), name="ui"
        )

    return app


def serve(settings: ServiceSettings) -> None:
    """Run the service under uvicorn (blocking)."""
    import uvicorn

    uvicorn.run(create_app(settings), host=settings.host, port=settings.port)
