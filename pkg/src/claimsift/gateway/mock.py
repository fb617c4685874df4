"""In-process mock server for the model-scorer wire protocol.

Backs the test suite and offline runs: embeddings come from the feature
hasher, pair scores from token-set overlap, classification from a fixed
or hash-derived probability. Everything is deterministic. The state
object records training traffic so tests can assert what reached the
server, and `misbehave` switches let protocol-violation paths be
exercised on demand.
"""

from __future__ import annotations

import asyncio
import hashlib
from typing import Optional

import httpx
from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from ..candidates import HashingEncoder
from ..textproc import tokenize
from .client import TASK_CLASSIFY, TASK_SCORE_PAIRS, TRAIN_TASKS

MOCK_CLASSIFIER_ID = "mock-classify"
MOCK_SCORER_ID = "mock-score"

MISBEHAVE_PROBS_OUT_OF_RANGE = "probs_out_of_range"
MISBEHAVE_SCORE_COUNT = "score_count_mismatch"
MISBEHAVE_MIXED_DIMS = "mixed_dims"


class SyncASGITransport(httpx.BaseTransport):
    """Routes a synchronous httpx.Client into an in-process ASGI app.

    httpx's bundled ASGITransport is async-only; this adapter replays each
    request through a short-lived AsyncClient so sync callers (the gateway
    client, the conformance suite) can exercise a FastAPI app without
    opening a socket.
    """

    _DROP_HEADERS = {"host", "content-length", "connection"}

    def __init__(self, app):
        self._app = app

    def handle_request(self, request: httpx.Request) -> httpx.Response:
        content = request.read()
        headers = [
            (k, v)
            for k, v in request.headers.items()
            if k.lower() not in self._DROP_HEADERS
        ]
        target = request.url.raw_path.decode("ascii")

        async def call() -> httpx.Response:
            transport = httpx.ASGITransport(app=self._app)
            async with httpx.AsyncClient(
                transport=transport, base_url="http://inprocess"
            ) as client:
                return await client.request(
                    request.method, target, content=content, headers=headers
                )

        response = asyncio.run(call())
        return httpx.Response(
            status_code=response.status_code,
            headers=response.headers,
            content=response.content,
        )


def overlap_score(left: str, right: str) -> float:
    """Jaccard overlap of token sets; identical texts score 1.0."""
    a, b = set(tokenize(left)), set(tokenize(right))
    if not a and not b:
        return 0.0
    union = len(a | b)
    return len(a & b) / union if union else 0.0


def hash_probability(text: str) -> float:
    digest = hashlib.blake2b(text.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "big") / float(2**64)


class MockGatewayState:
    def __init__(self, dim: int = 8, classify_value: Optional[float] = 0.7):
        self.encoder = HashingEncoder(dim)
        self.dim = dim
        # Fixed probability for every text; None switches to a per-text
        # hash-derived value instead.
        self.classify_value = classify_value
        self.misbehave: Optional[str] = None
        self.train_runs = 0
        self.train_requests: list[dict] = []
        self.models: dict[str, str] = {
            MOCK_CLASSIFIER_ID: TASK_CLASSIFY,
            MOCK_SCORER_ID: TASK_SCORE_PAIRS,
        }
        self._model_by_request: dict[str, str] = {}

    def classify_one(self, text: str) -> float:
        if self.misbehave == MISBEHAVE_PROBS_OUT_OF_RANGE:
            return 1.3
        if self.classify_value is not None:
            return self.classify_value
        return hash_probability(text)


def _error(status: int, code: str, message: str) -> JSONResponse:
    return JSONResponse({"code": code, "message": message}, status_code=status)


def _validate_row(task: str, index: int, row) -> Optional[str]:
    if not isinstance(row, dict):
        return f"row {index}: expected an object"
    if task == TASK_CLASSIFY:
        required = ("text", "label")
    else:
        required = ("left", "right", "label")
    for key in required:
        if key not in row:
            return f"row {index}: missing key {key!r}"
    for key in required[:-1]:
        if not isinstance(row[key], str) or not row[key].strip():
            return f"row {index}: {key!r} must be a non-empty string"
    if row["label"] not in (0, 1):
        return f"row {index}: label must be 0 or 1"
    return None


def build_mock_app(state: Optional[MockGatewayState] = None) -> FastAPI:
    state = state or MockGatewayState()
    app = FastAPI(title="mock model gateway")
    app.state.gateway = state

    async def _body(request: Request) -> Optional[dict]:
        try:
            doc = await request.json()
        except Exception:
            return None
        return doc if isinstance(doc, dict) else None

    @app.get("/v1/health")
    async def health():
        return {
            "status": "ok",
            "models": [
                {"model_id": mid, "task": task}
                for mid, task in sorted(state.models.items())
            ],
        }

    @app.post("/v1/embed")
    async def embed(request: Request):
        doc = await _body(request)
        if doc is None:
            return _error(400, "bad_request", "body must be a JSON object")
        texts = doc.get("texts")
        if not isinstance(texts, list) or any(not isinstance(t, str) for t in texts):
            return _error(400, "bad_request", "texts must be a list of strings")
        vectors = state.encoder.encode(texts).tolist() if texts else []
        if state.misbehave == MISBEHAVE_MIXED_DIMS and vectors:
            vectors[0] = vectors[0] + [0.0]
        return {"dim": state.dim, "vectors": vectors}

    @app.post("/v1/classify")
    async def classify(request: Request):
        doc = await _body(request)
        if doc is None:
            return _error(400, "bad_request", "body must be a JSON object")
        model_id = doc.get("model_id")
        texts = doc.get("texts")
        if not isinstance(texts, list) or any(not isinstance(t, str) for t in texts):
            return _error(400, "bad_request", "texts must be a list of strings")
        task = state.models.get(model_id)
        if task is None:
            return _error(404, "unknown_model", f"no model {model_id!r}")
        if task != TASK_CLASSIFY:
            return _error(400, "wrong_task", f"model {model_id!r} has task {task!r}")
        return {"probs": [state.classify_one(t) for t in texts]}

    @app.post("/v1/score_pairs")
    async def score_pairs(request: Request):
        doc = await _body(request)
        if doc is None:
            return _error(400, "bad_request", "body must be a JSON object")
        model_id = doc.get("model_id")
        pairs = doc.get("pairs")
        if not isinstance(pairs, list):
            return _error(400, "bad_request", "pairs must be a list")
        for i, pair in enumerate(pairs):
            if (
                not isinstance(pair, dict)
                or not isinstance(pair.get("left"), str)
                or not isinstance(pair.get("right"), str)
            ):
                return _error(400, "bad_request", f"pair {i} must have left and right strings")
        task = state.models.get(model_id)
        if task is None:
            return _error(404, "unknown_model", f"no model {model_id!r}")
        if task != TASK_SCORE_PAIRS:
            return _error(400, "wrong_task", f"model {model_id!r} has task {task!r}")
        scores = [overlap_score(p["left"], p["right"]) for p in pairs]
        if state.misbehave == MISBEHAVE_SCORE_COUNT and scores:
            scores = scores[:-1]
        return {"scores": scores}

    @app.post("/v1/train")
    async def train(request: Request):
        doc = await _body(request)
        if doc is None:
            return _error(400, "bad_request", "body must be a JSON object")
        task = doc.get("task")
        dataset = doc.get("dataset")
        request_id = doc.get("request_id")
        if task not in TRAIN_TASKS:
            return _error(400, "bad_request", f"task must be one of {list(TRAIN_TASKS)}")
        if not isinstance(dataset, list) or not dataset:
            return _error(400, "bad_dataset", "dataset must be a non-empty list")
        if not isinstance(request_id, str) or not request_id:
            return _error(400, "bad_request", "request_id must be a non-empty string")
        for i, row in enumerate(dataset):
            problem = _validate_row(task, i, row)
            if problem:
                return _error(400, "bad_dataset", problem)
        # A retried request must not train twice: same request_id, same ref.
        existing = state._model_by_request.get(request_id)
        if existing is not None:
            return {"model_id": existing}
        model_id = f"mock-{len(state._model_by_request) + 1}"
        state._model_by_request[request_id] = model_id
        state.models[model_id] = task
        state.train_runs += 1
        state.train_requests.append(
            {
                "task": task,
                "dataset_size": len(dataset),
                "hyperparams": dict(doc.get("hyperparams") or {}),
                "request_id": request_id,
                "model_id": model_id,
            }
        )
        return {"model_id": model_id}

    return app
