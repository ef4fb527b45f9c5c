"""HTTP API over the pipeline: upload datasets, generate and edit sheets."""

from __future__ import annotations

import os
import threading

from fastapi import BackgroundTasks, FastAPI, File, Form, Request, UploadFile
from fastapi.responses import JSONResponse, Response

from .agent import BlockStore, LiveTransport, RecordTransport, ReplayTransport, RunLog
from .errors import (
    CsvError,
    EditValidationError,
    FactsheetError,
    GenerationError,
    RevisionConflictError,
    SheetNotFoundError,
    UnsupportedRequestError,
    WorkerError,
)
from .export import sheet_to_pdf, sheet_to_svg
from .offline import OfflineTransport
from .pipeline import (
    DEFAULT_TOKEN_BUDGET,
    add_fact_from_request,
    generate_sheet,
    prepare_dataset,
)
from .sheet import SheetStore, apply_edit_ops

_STATUS_CODES = {
    SheetNotFoundError: 404,
    RevisionConflictError: 409,
    EditValidationError: 422,
    UnsupportedRequestError: 422,
    CsvError: 422,
    GenerationError: 500,
    WorkerError: 502,
}


def _error_response(exc: FactsheetError) -> JSONResponse:
    status = 500
    for etype, code in _STATUS_CODES.items():
        if isinstance(exc, etype):
            status = code
            break
    body = {"error": type(exc).__name__, "detail": str(exc)}
    if isinstance(exc, RevisionConflictError):
        body["expected"] = exc.expected
        body["actual"] = exc.actual
    if isinstance(exc, GenerationError):
        body["failures"] = exc.failures
    return JSONResponse(status_code=status, content=body)


def make_transport(mode: str, fixtures_dir: str | None = None):
    if mode == "live":
        return LiveTransport()
    if mode == "replay":
        return ReplayTransport(fixtures_dir)
    if mode == "record":
        inner = LiveTransport() if os.environ.get("FACTSHEET_API_KEY") \
            or os.environ.get("OPENAI_API_KEY") else OfflineTransport()
        return RecordTransport(inner, fixtures_dir)
    if mode == "offline":
        return OfflineTransport()
    raise ValueError(f"unknown transport mode {mode!r}")


class AppState:
    def __init__(self, workspace: str, transport, seed: int = 0,
                 token_budget: int = DEFAULT_TOKEN_BUDGET):
        self.workspace = workspace
        self.transport = transport
        self.seed = seed
        self.token_budget = token_budget
        self.datasets_dir = os.path.join(workspace, "datasets")
        os.makedirs(self.datasets_dir, exist_ok=True)
        self.sheets = SheetStore(workspace)
        self.blocks = BlockStore(os.path.join(workspace, "blocks"))
        self.run_log = RunLog(os.path.join(workspace, "runs.jsonl"))
        self.jobs: dict[str, dict] = {}
        self.lock = threading.Lock()
        self._prepared: dict[tuple, object] = {}

    def dataset_path(self, name: str) -> str:
        return os.path.join(self.datasets_dir, f"{name}.csv")

    def prepared(self, name: str, seed: int):
        key = (name, seed, self.token_budget)
        if key not in self._prepared:
            path = self.dataset_path(name)
            if not os.path.exists(path):
                raise SheetNotFoundError(f"no dataset named {name!r}")
            with open(path, "rb") as fh:
                self._prepared[key] = prepare_dataset(
                    fh.read(), name, seed, self.token_budget
                )
        return self._prepared[key]


def create_app(workspace: str, transport=None, seed: int = 0,
               token_budget: int = DEFAULT_TOKEN_BUDGET) -> FastAPI:
    app = FastAPI(title="factsheet", docs_url=None, redoc_url=None)
    state = AppState(workspace, transport or OfflineTransport(), seed, token_budget)
    app.state.factsheet = state

    @app.exception_handler(FactsheetError)
    async def _handle(request: Request, exc: FactsheetError):
        return _error_response(exc)

    @app.get("/health")
    def health():
        return {"status": "ok"}

    @app.post("/datasets", status_code=201)
    async def upload_dataset(file: UploadFile = File(...),
                             name: str = Form(None)):
        dataset_name = name or os.path.splitext(file.filename or "dataset")[0]
        if not dataset_name or "/" in dataset_name or dataset_name.startswith("."):
            raise EditValidationError(f"invalid dataset name {dataset_name!r}")
        data = await file.read()
        # parse eagerly so a broken upload fails here, not at generation time
        prepared = prepare_dataset(data, dataset_name, state.seed,
                                   state.token_budget)
        with open(state.dataset_path(dataset_name), "wb") as fh:
            fh.write(data)
        return {
            "name": dataset_name,
            "rows": prepared.dataset.row_count,
            "columns": [
                {"name": c.name, "data_class": c.data_class}
                for c in prepared.dataset.columns
            ],
        }

    def _run_generation(sheet_id: str, dataset: str, seed: int,
                        user_request: str | None, max_facts: int):
        try:
            prepared = state.prepared(dataset, seed)
            sheet = generate_sheet(
                prepared, seed, state.transport, state.blocks,
                user_request=user_request, run_log=state.run_log,
                max_facts=max_facts,
            )
            state.sheets.save(sheet)
            with state.lock:
                state.jobs[sheet_id] = {"state": "done", "sheet_id": sheet.id}
        except Exception as exc:  # job state is the only place errors can go
            detail = {"state": "failed", "error": str(exc)}
            if isinstance(exc, GenerationError):
                detail["failures"] = exc.failures
            with state.lock:
                state.jobs[sheet_id] = detail

    @app.post("/sheets", status_code=202)
    def create_sheet(body: dict, background: BackgroundTasks):
        dataset = body.get("dataset")
        if not dataset:
            raise EditValidationError("body must name a dataset")
        seed = int(body.get("seed", state.seed))
        user_request = body.get("request") or None
        if user_request:
            from .pipeline import check_request_supported
            check_request_supported(user_request)
        max_facts = int(body.get("max_facts", 12))
        if not os.path.exists(state.dataset_path(dataset)):
            raise SheetNotFoundError(f"no dataset named {dataset!r}")
        from .pipeline import _sheet_id
        sheet_id = _sheet_id(dataset, seed, user_request)
        with state.lock:
            state.jobs[sheet_id] = {"state": "running"}
        background.add_task(_run_generation, sheet_id, dataset, seed,
                            user_request, max_facts)
        return {"sheet_id": sheet_id, "state": "running"}

    @app.get("/sheets/{sheet_id}/status")
    def sheet_status(sheet_id: str):
        with state.lock:
            job = state.jobs.get(sheet_id)
        if job is None:
            try:
                state.sheets.load(sheet_id)
            except SheetNotFoundError:
                raise SheetNotFoundError(f"no sheet or job with id {sheet_id!r}")
            return {"state": "done", "sheet_id": sheet_id}
        return dict(job)

    @app.get("/sheets/{sheet_id}")
    def get_sheet(sheet_id: str):
        return state.sheets.load(sheet_id).to_json_dict()

    @app.patch("/sheets/{sheet_id}")
    def edit_sheet(sheet_id: str, body: dict):
        sheet = state.sheets.load(sheet_id)
        revision = body.get("revision")
        if not isinstance(revision, int):
            raise EditValidationError("body must carry the base revision number")
        apply_edit_ops(sheet, revision, body.get("ops", []))
        state.sheets.save(sheet)
        return sheet.to_json_dict()

    @app.post("/sheets/{sheet_id}/facts", status_code=201)
    def add_fact(sheet_id: str, body: dict):
        sheet = state.sheets.load(sheet_id)
        prepared = state.prepared(sheet.dataset_name, sheet.seed)
        fact_id = add_fact_from_request(
            sheet, body.get("request", ""), prepared, state.transport,
            state.blocks, state.run_log,
        )
        state.sheets.save(sheet)
        return {"fact_id": fact_id, "revision": sheet.revision,
                "sheet": sheet.to_json_dict()}

    @app.get("/sheets/{sheet_id}/export")
    def export_sheet(sheet_id: str, format: str = "svg"):
        sheet = state.sheets.load(sheet_id)
        if format == "svg":
            return Response(content=sheet_to_svg(sheet),
                            media_type="image/svg+xml")
        if format == "pdf":
            return Response(content=sheet_to_pdf(sheet),
                            media_type="application/pdf")
        raise EditValidationError("format must be 'svg' or 'pdf'")

    return app
