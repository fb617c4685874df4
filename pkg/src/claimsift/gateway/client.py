"""HTTP client for the model-scorer wire protocol.

All transformer work (embedding, classification, pair scoring, training)
happens behind this boundary. The client chunks batches, retries
transport failures, and checks every response against the protocol; it
never repairs out-of-spec values silently.

Wire protocol (JSON over HTTP/1.1):

* GET  /v1/health                 -> {status: "ok", models: [...]}
* POST /v1/embed {texts}          -> {dim, vectors}
* POST /v1/classify {model_id, texts} -> {probs}
* POST /v1/score_pairs {model_id, pairs: [{left, right}]} -> {scores}
* POST /v1/train {task, dataset, hyperparams, request_id} -> {model_id}

Every POST body carries a client-generated request_id; retries reuse it,
and servers must treat /v1/train as idempotent per request_id. Training
datasets are lists of rows: {"text", "label"} for classify,
{"left", "right", "label"} for score_pairs, labels 0 or 1.
"""

from __future__ import annotations

import json
import time
import uuid
from dataclasses import dataclass, field
from typing import Any, Optional, Sequence

import httpx

from ..errors import (
    DatasetTooLargeError,
    GatewayProtocolError,
    GatewayServerError,
    GatewayTransportError,
)

TASK_EMBED = "embed"
TASK_CLASSIFY = "classify"
TASK_SCORE_PAIRS = "score_pairs"

TRAIN_TASKS = (TASK_CLASSIFY, TASK_SCORE_PAIRS)

DEFAULT_MAX_TRAIN_BYTES = 16 * 1024 * 1024


@dataclass(frozen=True)
class RetryPolicy:
    attempts: int = 3
    backoff_ms: int = 50

    def __post_init__(self):
        if self.attempts < 1:
            raise ValueError("attempts must be >= 1")
        if self.backoff_ms < 0:
            raise ValueError("backoff_ms must be >= 0")


@dataclass(frozen=True)
class GatewayEndpoint:
    base_url: str
    timeout_ms: int = 10_000
    max_batch: int = 128
    retry: RetryPolicy = field(default_factory=RetryPolicy)
    token: Optional[str] = None
    max_train_bytes: int = DEFAULT_MAX_TRAIN_BYTES

    def __post_init__(self):
        if self.timeout_ms <= 0:
            raise ValueError("timeout_ms must be > 0")
        if self.max_batch < 1:
            raise ValueError("max_batch must be >= 1")


@dataclass(frozen=True)
class RemoteModelRef:
    model_id: str
    task: str

    def __post_init__(self):
        if self.task not in TRAIN_TASKS:
            raise ValueError(f"task must be one of {TRAIN_TASKS}, got {self.task!r}")
        if not self.model_id:
            raise ValueError("model_id must be non-empty")


def _new_request_id() -> str:
    return uuid.uuid4().hex


class GatewayClient:
    """Shareable protocol client bound to one endpoint.

    Pass `transport` to route requests in-process (tests use
    httpx.ASGITransport against a server app, or httpx.MockTransport for
    fault injection).
    """

    def __init__(
        self,
        endpoint: GatewayEndpoint,
        transport: Optional[httpx.BaseTransport] = None,
    ):
        self.endpoint = endpoint
        headers = {}
        if endpoint.token:
            headers["Authorization"] = f"Bearer {endpoint.token}"
        self._http = httpx.Client(
            base_url=endpoint.base_url,
            timeout=endpoint.timeout_ms / 1000.0,
            headers=headers,
            transport=transport,
        )

    def close(self) -> None:
        self._http.close()

    def __enter__(self) -> "GatewayClient":
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    def _request(
        self, method: str, path: str, payload: Optional[dict], request_id: str
    ) -> Any:
        retry = self.endpoint.retry
        last_error: Optional[Exception] = None
        for attempt in range(retry.attempts):
            if attempt and retry.backoff_ms:
                time.sleep(retry.backoff_ms * attempt / 1000.0)
            try:
                response = self._http.request(
                    method,
                    path,
                    json=payload,
                    headers={"X-Request-Id": request_id},
                )
            except httpx.TransportError as exc:
                last_error = exc
                continue
            if response.status_code >= 400:
                raise GatewayServerError(
                    f"{method} {path} -> {response.status_code}: {_error_text(response)}"
                )
            try:
                return response.json()
            except ValueError as exc:
                raise GatewayProtocolError(
                    f"{method} {path}: response is not JSON"
                ) from exc
        raise GatewayTransportError(
            f"{method} {path} failed after {retry.attempts} attempts: {last_error}"
        )

    def _post(self, path: str, payload: dict, request_id: Optional[str] = None) -> Any:
        rid = request_id or _new_request_id()
        body = dict(payload)
        body["request_id"] = rid
        return self._request("POST", path, body, rid)

    def health(self) -> dict:
        doc = self._request("GET", "/v1/health", None, _new_request_id())
        if not isinstance(doc, dict) or doc.get("status") != "ok":
            raise GatewayProtocolError(f"bad health payload: {doc!r}")
        if not isinstance(doc.get("models"), list):
            raise GatewayProtocolError("health payload lacks a models list")
        return doc

    def embed(self, texts: Sequence[str]) -> list[list[float]]:
        """One vector per text, order preserved; inputs beyond max_batch
        are split across requests transparently."""
        texts = list(texts)
        if not texts:
            return []
        vectors: list[list[float]] = []
        dim: Optional[int] = None
        for start in range(0, len(texts), self.endpoint.max_batch):
            chunk = texts[start : start + self.endpoint.max_batch]
            doc = self._post("/v1/embed", {"texts": chunk})
            got_dim, got_vectors = _check_embed_payload(doc, len(chunk))
            if dim is None:
                dim = got_dim
            elif got_dim != dim:
                raise GatewayProtocolError(
                    f"embedding dimension changed across chunks: {dim} then {got_dim}"
                )
            vectors.extend(got_vectors)
        return vectors

    def classify(self, model: RemoteModelRef, texts: Sequence[str]) -> list[float]:
        if model.task != TASK_CLASSIFY:
            raise ValueError(f"model {model.model_id!r} is not a classifier")
        texts = list(texts)
        if not texts:
            return []
        probs: list[float] = []
        for start in range(0, len(texts), self.endpoint.max_batch):
            chunk = texts[start : start + self.endpoint.max_batch]
            doc = self._post(
                "/v1/classify", {"model_id": model.model_id, "texts": chunk}
            )
            probs.extend(_check_probs_payload(doc, len(chunk)))
        return probs

    def score_pairs(
        self, model: RemoteModelRef, pairs: Sequence[tuple[str, str]]
    ) -> list[float]:
        if model.task != TASK_SCORE_PAIRS:
            raise ValueError(f"model {model.model_id!r} is not a pair scorer")
        pairs = list(pairs)
        if not pairs:
            return []
        scores: list[float] = []
        for start in range(0, len(pairs), self.endpoint.max_batch):
            chunk = pairs[start : start + self.endpoint.max_batch]
            doc = self._post(
                "/v1/score_pairs",
                {
                    "model_id": model.model_id,
                    "pairs": [{"left": left, "right": right} for left, right in chunk],
                },
            )
            scores.extend(_check_scores_payload(doc, len(chunk)))
        return scores

    def train(
        self,
        task: str,
        dataset: Sequence[dict],
        hyperparams: Optional[dict] = None,
        request_id: Optional[str] = None,
    ) -> RemoteModelRef:
        """Submit a training job; returns a ref usable with classify or
        score_pairs. The dataset is size-checked before anything is sent.
        """
        if task not in TRAIN_TASKS:
            raise ValueError(f"task must be one of {TRAIN_TASKS}, got {task!r}")
        rows = list(dataset)
        encoded = json.dumps(rows).encode("utf-8")
        if len(encoded) > self.endpoint.max_train_bytes:
            raise DatasetTooLargeError(
                f"dataset serializes to {len(encoded)} bytes, "
                f"limit {self.endpoint.max_train_bytes}"
            )
        doc = self._post(
            "/v1/train",
            {"task": task, "dataset": rows, "hyperparams": dict(hyperparams or {})},
            request_id=request_id,
        )
        if not isinstance(doc, dict) or not isinstance(doc.get("model_id"), str):
            raise GatewayProtocolError(f"bad train payload: {doc!r}")
        if not doc["model_id"]:
            raise GatewayProtocolError("server returned an empty model_id")
        return RemoteModelRef(doc["model_id"], task)


def _error_text(response: httpx.Response) -> str:
    try:
        doc = response.json()
        if isinstance(doc, dict) and "message" in doc:
            return str(doc["message"])
    except ValueError:
        pass
    return response.text[:200]


def _check_embed_payload(doc: Any, expected: int) -> tuple[int, list[list[float]]]:
    if not isinstance(doc, dict):
        raise GatewayProtocolError(f"bad embed payload: {doc!r}")
    dim = doc.get("dim")
    vectors = doc.get("vectors")
    if not isinstance(dim, int) or dim < 1 or not isinstance(vectors, list):
        raise GatewayProtocolError(f"bad embed payload: {doc!r}")
    if len(vectors) != expected:
        raise GatewayProtocolError(
            f"asked for {expected} vectors, got {len(vectors)}"
        )
    out = []
    for i, vec in enumerate(vectors):
        if not isinstance(vec, list) or len(vec) != dim:
            raise GatewayProtocolError(
                f"vector {i} has length {len(vec) if isinstance(vec, list) else '?'}, "
                f"declared dim is {dim}"
            )
        out.append([float(x) for x in vec])
    return dim, out


def _check_probs_payload(doc: Any, expected: int) -> list[float]:
    if not isinstance(doc, dict) or not isinstance(doc.get("probs"), list):
        raise GatewayProtocolError(f"bad classify payload: {doc!r}")
    probs = doc["probs"]
    if len(probs) != expected:
        raise GatewayProtocolError(f"asked for {expected} probs, got {len(probs)}")
    out = []
    for i, p in enumerate(probs):
        value = float(p)
        if not 0.0 <= value <= 1.0:
            raise GatewayProtocolError(f"probability {i} out of range: {value}")
        out.append(value)
    return out


def _check_scores_payload(doc: Any, expected: int) -> list[float]:
    if not isinstance(doc, dict) or not isinstance(doc.get("scores"), list):
        raise GatewayProtocolError(f"bad score payload: {doc!r}")
    scores = doc["scores"]
    if len(scores) != expected:
        raise GatewayProtocolError(f"asked for {expected} scores, got {len(scores)}")
    return [float(s) for s in scores]


def gw_embed(endpoint: GatewayEndpoint, texts: Sequence[str]) -> list[list[float]]:
    with GatewayClient(endpoint) as client:
        return client.embed(texts)


def gw_classify(
    endpoint: GatewayEndpoint, model: RemoteModelRef, texts: Sequence[str]
) -> list[float]:
    with GatewayClient(endpoint) as client:
        return client.classify(model, texts)


def gw_score_pairs(
    endpoint: GatewayEndpoint,
    model: RemoteModelRef,
    pairs: Sequence[tuple[str, str]],
) -> list[float]:
    with GatewayClient(endpoint) as client:
        return client.score_pairs(model, pairs)


def gw_train(
    endpoint: GatewayEndpoint,
    task: str,
    dataset: Sequence[dict],
    hyperparams: Optional[dict] = None,
) -> RemoteModelRef:
    with GatewayClient(endpoint) as client:
        return client.train(task, dataset, hyperparams)
