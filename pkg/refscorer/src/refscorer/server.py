"""FastAPI app for the model-scorer wire protocol.

Routes:

* GET  /v1/health                     -> {status, models}
* POST /v1/embed {texts}              -> {dim, vectors}
* POST /v1/classify {model_id, texts} -> {probs}
* POST /v1/score_pairs {model_id, pairs: [{left, right}]} -> {scores}
* POST /v1/train {task, dataset, hyperparams, request_id} -> {model_id}

Bodies are parsed by hand instead of through pydantic models so every
4xx keeps the protocol's {code, message} shape. Handlers are async for
request parsing; inference and training run in the threadpool under the
model locks, and one train lock makes the request_id idempotency
check-and-train atomic.
"""

from __future__ import annotations

import hashlib
import threading
from typing import Any, Optional

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse
from starlette.concurrency import run_in_threadpool

from .registry import (
    TASK_CLASSIFY,
    TASK_SCORE_PAIRS,
    ServerConfig,
    build_registry,
)
from .textmodels import OverlapCrossScorer, TfidfLogisticClassifier

TRAIN_TASKS = (TASK_CLASSIFY, TASK_SCORE_PAIRS)

# Forwarded hyperparams override these per task; unknown keys are ignored.
HYPER_DEFAULTS = {
    TASK_CLASSIFY: {"epochs": 5, "batch_size": 20, "learning_rate": 1.0},
    TASK_SCORE_PAIRS: {"epochs": 3, "batch_size": 16, "learning_rate": 1.0},
}


class ServerState:
    """Everything behind the routes: backends, registry, train history."""

    def __init__(self, config: Optional[ServerConfig] = None):
        self.config = config or ServerConfig()
        self.encoder, self.registry = build_registry(self.config)
        self.encoder_lock = threading.Lock()
        self.train_lock = threading.Lock()
        self.trained_by_request: dict[str, str] = {}
        self.train_runs = 0


def _error(status: int, code: str, message: str) -> JSONResponse:
    return JSONResponse({"code": code, "message": message}, status_code=status)


def _validate_row(task: str, index: int, row: Any) -> Optional[str]:
    if not isinstance(row, dict):
        return f"row {index}: expected an object"
    text_keys = ("text",) if task == TASK_CLASSIFY else ("left", "right")
    for key in text_keys:
        value = row.get(key)
        if not isinstance(value, str) or not value.strip():
            return f"row {index}: {key!r} must be a non-empty string"
    if "label" not in row:
        return f"row {index}: missing key 'label'"
    if row["label"] not in (0, 1):
        return f"row {index}: label must be 0 or 1"
    return None


def _merge_hyperparams(task: str, given: Any) -> dict | str:
    """Defaults overlaid with the forwarded values; returns an error
    string when a known key carries a value the trainers cannot use."""
    if given is None:
        given = {}
    if not isinstance(given, dict):
        return "hyperparams must be an object"
    merged = dict(HYPER_DEFAULTS[task])
    for key in ("epochs", "batch_size"):
        if key in given:
            value = given[key]
            if not isinstance(value, int) or isinstance(value, bool) or value < 1:
                return f"hyperparam {key!r} must be a positive integer"
            merged[key] = value
    if "learning_rate" in given:
        value = given["learning_rate"]
        if not isinstance(value, (int, float)) or isinstance(value, bool) or value <= 0:
            return "hyperparam 'learning_rate' must be a positive number"
        merged["learning_rate"] = float(value)
    return merged


def _trained_model_id(request_id: str) -> str:
    digest = hashlib.blake2b(request_id.encode("utf-8"), digest_size=6).hexdigest()
    return f"t-{digest}"


def create_app(
    config: Optional[ServerConfig] = None, state: Optional[ServerState] = None
) -> FastAPI:
    state = state or ServerState(config)
    app = FastAPI(title="reference model scorer")
    app.state.scorer = state
    token = state.config.token

    def _denied(request: Request) -> Optional[JSONResponse]:
        if token is None:
            return None
        if request.headers.get("authorization") == f"Bearer {token}":
            return None
        return _error(401, "unauthorized", "missing or wrong bearer token")

    async def _body(request: Request) -> Optional[dict]:
        try:
            doc = await request.json()
        except Exception:
            return None
        return doc if isinstance(doc, dict) else None

    def _embed_locked(texts: list[str]) -> list[list[float]]:
        with state.encoder_lock:
            return state.encoder.encode(texts)

    def _classify_locked(entry, texts: list[str]) -> list[float]:
        with entry.lock:
            return [float(p) for p in entry.handle.predict(texts)]

    def _score_locked(entry, pairs: list[tuple[str, str]]) -> list[float]:
        with entry.lock:
            return [float(s) for s in entry.handle.score(pairs)]

    def _fit(task: str, dataset: list[dict], hyper: dict) -> Any:
        lr = hyper["learning_rate"]
        epochs = hyper["epochs"]
        batch = hyper["batch_size"]
        if task == TASK_CLASSIFY:
            rows = [(row["text"], int(row["label"])) for row in dataset]
            model = TfidfLogisticClassifier(learning_rate=lr)
            return model.fit(rows, epochs=epochs, batch_size=batch)
        pair_rows = [(row["left"], row["right"], int(row["label"])) for row in dataset]
        scorer = OverlapCrossScorer(learning_rate=lr)
        return scorer.fit(pair_rows, epochs=epochs, batch_size=batch)

    def _train_locked(
        task: str, dataset: list[dict], hyper: dict, request_id: str
    ) -> str:
        # A retried request must not train twice: same request_id, same id.
        with state.train_lock:
            existing = state.trained_by_request.get(request_id)
            if existing is not None:
                return existing
            model_id = _trained_model_id(request_id)
            if state.registry.get(model_id) is not None:
                model_id = f"{model_id}-{len(state.trained_by_request)}"
            handle = _fit(task, dataset, hyper)
            state.registry.add(model_id, task, handle)
            state.trained_by_request[request_id] = model_id
            state.train_runs += 1
            return model_id

    @app.get("/v1/health")
    async def health():
        return {"status": "ok", "models": state.registry.inventory()}

    @app.post("/v1/embed")
    async def embed(request: Request):
        denied = _denied(request)
        if denied is not None:
            return denied
        doc = await _body(request)
        if doc is None:
            return _error(400, "bad_request", "body must be a JSON object")
        texts = doc.get("texts")
        if not isinstance(texts, list) or any(not isinstance(t, str) for t in texts):
            return _error(400, "bad_request", "texts must be a list of strings")
        vectors = await run_in_threadpool(_embed_locked, texts) if texts else []
        return {"dim": state.encoder.dim, "vectors": vectors}

    @app.post("/v1/classify")
    async def classify(request: Request):
        denied = _denied(request)
        if denied is not None:
            return denied
        doc = await _body(request)
        if doc is None:
            return _error(400, "bad_request", "body must be a JSON object")
        texts = doc.get("texts")
        if not isinstance(texts, list) or any(not isinstance(t, str) for t in texts):
            return _error(400, "bad_request", "texts must be a list of strings")
        model_id = doc.get("model_id")
        if not isinstance(model_id, str):
            return _error(400, "bad_request", "model_id must be a string")
        entry = state.registry.get(model_id)
        if entry is None:
            return _error(404, "unknown_model", f"no model {model_id!r}")
        if entry.task != TASK_CLASSIFY:
            return _error(
                400, "wrong_task", f"model {model_id!r} has task {entry.task!r}"
            )
        probs = await run_in_threadpool(_classify_locked, entry, texts)
        return {"probs": probs}

    @app.post("/v1/score_pairs")
    async def score_pairs(request: Request):
        denied = _denied(request)
        if denied is not None:
            return denied
        doc = await _body(request)
        if doc is None:
            return _error(400, "bad_request", "body must be a JSON object")
        pairs = doc.get("pairs")
        if not isinstance(pairs, list):
            return _error(400, "bad_request", "pairs must be a list")
        for i, pair in enumerate(pairs):
            if (
                not isinstance(pair, dict)
                or not isinstance(pair.get("left"), str)
                or not isinstance(pair.get("right"), str)
            ):
                return _error(
                    400, "bad_request", f"pair {i} must have left and right strings"
                )
        model_id = doc.get("model_id")
        if not isinstance(model_id, str):
            return _error(400, "bad_request", "model_id must be a string")
        entry = state.registry.get(model_id)
        if entry is None:
            return _error(404, "unknown_model", f"no model {model_id!r}")
        if entry.task != TASK_SCORE_PAIRS:
            return _error(
                400, "wrong_task", f"model {model_id!r} has task {entry.task!r}"
            )
        tuples = [(p["left"], p["right"]) for p in pairs]
        scores = await run_in_threadpool(_score_locked, entry, tuples)
        return {"scores": scores}

    @app.post("/v1/train")
    async def train(request: Request):
        denied = _denied(request)
        if denied is not None:
            return denied
        doc = await _body(request)
        if doc is None:
            return _error(400, "bad_request", "body must be a JSON object")
        task = doc.get("task")
        if task not in TRAIN_TASKS:
            return _error(400, "bad_request", f"task must be one of {list(TRAIN_TASKS)}")
        dataset = doc.get("dataset")
        if not isinstance(dataset, list) or not dataset:
            return _error(400, "bad_dataset", "dataset must be a non-empty list")
        request_id = doc.get("request_id")
        if not isinstance(request_id, str) or not request_id:
            return _error(400, "bad_request", "request_id must be a non-empty string")
        if len(dataset) > state.config.max_train_rows:
            return _error(
                413,
                "dataset_too_large",
                f"{len(dataset)} rows, limit {state.config.max_train_rows}",
            )
        for i, row in enumerate(dataset):
            problem = _validate_row(task, i, row)
            if problem:
                return _error(400, "bad_dataset", problem)
        hyper = _merge_hyperparams(task, doc.get("hyperparams"))
        if isinstance(hyper, str):
            return _error(400, "bad_request", hyper)
        try:
            model_id = await run_in_threadpool(
                _train_locked, task, dataset, hyper, request_id
            )
        except MemoryError:
            return _error(500, "server_error", "training exhausted memory")
        return {"model_id": model_id}

    return app
