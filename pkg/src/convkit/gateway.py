"""HTTP/JSON service over the workbench.

Every non-success response body is exactly one ApiError:
``{"code": bad_request|not_found|conflict|internal, "message": ..., "details": ...}``.
Notifications long-poll for up to 25 seconds.  When a built frontend exists
(``frontend/dist`` next to the workspace or via CONVKIT_FRONTEND), it is
served statically at the root path.
"""

from __future__ import annotations

import os
from pathlib import Path

from fastapi import FastAPI, Query, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from convkit.datastore import DatasetError, FormatNotBuiltError
from convkit.engine import EngineError
from convkit.experiment import ExperimentError
from convkit.netdef import DeployError
from convkit.shapes import ShapeError
from convkit.taskhub import TaskError, TaskRecord
from convkit.workbench import Workbench, WorkbenchError
from convkit.workspace import NotFoundError

__all__ = ["create_app", "api_error"]

LONG_POLL_CAP_SECONDS = 25.0


def api_error(code: str, message: str, status: int, details=None) -> JSONResponse:
    body = {"code": code, "message": message}
    if details is not None:
        body["details"] = details
    return JSONResponse(status_code=status, content=body)


class ImportRequest(BaseModel):
    path: str
    format: str | None = None


class SplitRequest(BaseModel):
    train_fraction: float
    seed: int = 0
    stratified: bool = False


class ValidateRequest(BaseModel):
    source: str
    input_shape: list[int] | None = Field(default=None, min_length=4, max_length=4)


class CompleteRequest(BaseModel):
    source: str
    line: int = Field(ge=1)
    column: int = Field(ge=1)


class SaveNetRequest(BaseModel):
    source: str


class TrainRequest(BaseModel):
    net_id: str
    dataset_id: str
    solver_source: str | None = None
    solver: dict | None = None


class ExtractRequest(BaseModel):
    model_id: str
    dataset_id: str
    layers: list[str]


class TestRequest(BaseModel):
    model_id: str
    dataset_id: str


def _record_json(record: TaskRecord) -> dict:
    return record.to_json()


def create_app(bench: Workbench) -> FastAPI:
    app = FastAPI(title="convkit gateway", version="1")

    @app.exception_handler(RequestValidationError)
    async def _bad_body(request: Request, exc: RequestValidationError):
        return api_error("bad_request", "request body does not validate", 400, details=exc.errors())

    @app.exception_handler(NotFoundError)
    async def _not_found(request: Request, exc: NotFoundError):
        return api_error("not_found", str(exc.args[0]) if exc.args else str(exc), 404)

    @app.exception_handler(FormatNotBuiltError)
    async def _not_built(request: Request, exc: FormatNotBuiltError):
        return api_error("conflict", str(exc), 409)

    for klass in (DatasetError, EngineError, ExperimentError, DeployError,
                  ShapeError, WorkbenchError, TaskError, ValueError):
        @app.exception_handler(klass)
        async def _domain(request: Request, exc: Exception):
            return api_error("bad_request", str(exc), 400)

    @app.exception_handler(Exception)
    async def _internal(request: Request, exc: Exception):
        return api_error("internal", f"{type(exc).__name__}: {exc}", 500)

    # -- datasets ----------------------------------------------------------

    @app.post("/datasets/import")
    def datasets_import(body: ImportRequest):
        record = bench.submit_import(body.path, body.format)
        return {"task": _record_json(record)}

    @app.get("/datasets")
    def datasets_list():
        return {"datasets": bench.list_datasets()}

    @app.get("/datasets/{dataset_id}")
    def datasets_get(dataset_id: str):
        return bench.dataset_meta(dataset_id)

    @app.post("/datasets/{dataset_id}/split")
    def datasets_split(dataset_id: str, body: SplitRequest):
        return bench.split_dataset(dataset_id, body.train_fraction, body.seed, body.stratified)

    # -- nets ----------------------------------------------------------------

    @app.post("/nets/validate")
    def nets_validate(body: ValidateRequest):
        return bench.validate_net(body.source, body.input_shape)

    @app.post("/nets/complete")
    def nets_complete(body: CompleteRequest):
        return {"suggestions": bench.complete(body.source, body.line, body.column)}

    @app.post("/nets")
    def nets_save(body: SaveNetRequest):
        return {"id": bench.save_net(body.source)}

    @app.get("/nets")
    def nets_list():
        return {"nets": [{"id": key, **meta} for key, meta in sorted(bench.workspace.list("nets").items())]}

    @app.get("/nets/{net_id}")
    def nets_get(net_id: str):
        return {"id": net_id, "source": bench.get_net(net_id)}

    @app.post("/nets/{net_id}/deploy")
    def nets_deploy(net_id: str):
        return bench.deploy_net(net_id)

    # -- training and experiments ---------------------------------------------

    @app.post("/train")
    def train_submit(body: TrainRequest):
        record = bench.submit_train(body.net_id, body.dataset_id, body.solver_source, body.solver)
        return {"task": _record_json(record)}

    @app.post("/experiments/extract")
    def experiments_extract(body: ExtractRequest):
        record = bench.submit_extract(body.model_id, body.dataset_id, body.layers)
        return {"task": _record_json(record)}

    @app.post("/experiments/test")
    def experiments_test(body: TestRequest):
        record = bench.submit_test(body.model_id, body.dataset_id)
        return {"task": _record_json(record)}

    # -- tasks and notifications -------------------------------------------------

    @app.get("/tasks")
    def tasks_list():
        return {"tasks": [_record_json(r) for r in bench.hub.list()]}

    @app.get("/tasks/{task_id}")
    def tasks_get(task_id: str):
        try:
            return {"task": _record_json(bench.hub.get(task_id))}
        except TaskError as exc:
            return api_error("not_found", str(exc), 404)

    @app.post("/tasks/{task_id}/cancel")
    def tasks_cancel(task_id: str):
        try:
            acknowledged = bench.hub.cancel(task_id)
        except TaskError as exc:
            return api_error("not_found", str(exc), 404)
        return {"acknowledged": acknowledged}

    @app.get("/notifications")
    def notifications(after: int = Query(0, ge=0), timeout: float = Query(LONG_POLL_CAP_SECONDS, ge=0)):
        timeout = min(timeout, LONG_POLL_CAP_SECONDS)
        events, floor = bench.hub.wait_feed(after, timeout)
        return {
            "events": [n.to_json() for n in events],
            "floor": floor,
            "latest": events[-1].sequence if events else max(after, floor),
        }

    # -- models and features -------------------------------------------------------

    @app.get("/models")
    def models_list():
        return {"models": [{"id": key, **meta} for key, meta in sorted(bench.workspace.list("models").items())]}

    @app.get("/models/{model_id}")
    def models_get(model_id: str):
        return bench.model_meta(model_id)

    @app.get("/features/{feature_id}/grid")
    def features_grid(feature_id: str, sample: int = Query(0, ge=0)):
        return bench.feature_grid(feature_id, sample)

    @app.get("/features/{feature_id}")
    def features_get(feature_id: str):
        return {"id": feature_id, **bench.workspace.meta("features", feature_id)}

    _mount_frontend(app)
    return app


def _mount_frontend(app: FastAPI):
    candidates = []
    if os.environ.get("CONVKIT_FRONTEND"):
        candidates.append(Path(os.environ["CONVKIT_FRONTEND"]))
    candidates.append(Path(__file__).resolve().parents[2] / "frontend" / "dist")
    candidates.append(Path.cwd() / "frontend" / "dist")
    for candidate in candidates:
        if candidate.is_dir() and (candidate / "index.html").exists():
            from fastapi.staticfiles import StaticFiles

            app.mount("/", StaticFiles(directory=str(candidate), html=True), name="ui")
            return
