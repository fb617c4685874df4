"""Black-box conformance checks for model-scorer servers.

Any server claiming the wire protocol must pass these: the bundled mock,
and any external scorer service. Checks go over HTTP only — no reaching
into server internals — so the same suite runs against an in-process app
(via the test client) or a live base URL.
"""

from __future__ import annotations

import uuid
from dataclasses import dataclass
from typing import Callable, Optional

import httpx

_EMBED_TEXTS = ["troops crossed the border at dawn", "a festival of kites"]
_CLASSIFY_ROWS = [
    {"text": "the bridge was destroyed by shelling", "label": 1},
    {"text": "a new bakery opened downtown", "label": 0},
    {"text": "enemy jets bombed the station", "label": 1},
    {"text": "the cat slept all afternoon", "label": 0},
    {"text": "officials denied the strike happened", "label": 1},
    {"text": "rain is expected on sunday", "label": 0},
]
_SCORE_ROWS = [
    {"left": "the dam was blown up", "right": "dam destroyed in explosion", "label": 1},
    {"left": "the dam was blown up", "right": "a recipe for lemon cake", "label": 0},
    {"left": "convoy seen near the city", "right": "military convoy spotted close to town", "label": 1},
    {"left": "convoy seen near the city", "right": "stock markets rallied today", "label": 0},
    {"left": "hospital hit by rockets", "right": "rockets struck the hospital", "label": 1},
    {"left": "hospital hit by rockets", "right": "tips for growing tomatoes", "label": 0},
]


@dataclass
class CheckResult:
    name: str
    ok: bool
    detail: str = ""


class _Fail(Exception):
    pass


def _require(condition: bool, detail: str) -> None:
    if not condition:
        raise _Fail(detail)


def _close_lists(a, b, tol: float) -> bool:
    if len(a) != len(b):
        return False
    return all(abs(float(x) - float(y)) <= tol for x, y in zip(a, b))


def _make_client(base_url: Optional[str], app) -> httpx.Client:
    if (base_url is None) == (app is None):
        raise ValueError("pass exactly one of base_url or app")
    if app is not None:
        from .mock import SyncASGITransport

        return httpx.Client(
            base_url="http://inprocess", transport=SyncASGITransport(app)
        )
    return httpx.Client(base_url=base_url, timeout=30.0)


def run_conformance(
    base_url: Optional[str] = None, app=None
) -> list[CheckResult]:
    """Run every check in order; a failed check never aborts the rest."""
    run_tag = uuid.uuid4().hex[:12]
    ctx: dict[str, str] = {}
    client = _make_client(base_url, app)
    results: list[CheckResult] = []
    with client:
        for name, check in _checks():
            try:
                check(client, ctx, run_tag)
            except _Fail as exc:
                results.append(CheckResult(name, False, str(exc)))
            except Exception as exc:  # transport faults, missing ctx, etc.
                results.append(CheckResult(name, False, f"{type(exc).__name__}: {exc}"))
            else:
                results.append(CheckResult(name, True))
    return results


def assert_conformance(base_url: Optional[str] = None, app=None) -> list[CheckResult]:
    results = run_conformance(base_url=base_url, app=app)
    failed = [r for r in results if not r.ok]
    if failed:
        summary = "; ".join(f"{r.name}: {r.detail}" for r in failed)
        raise AssertionError(f"{len(failed)} conformance check(s) failed: {summary}")
    return results


def _checks() -> list[tuple[str, Callable]]:
    return [
        ("health_shape", _check_health),
        ("embed_shape", _check_embed_shape),
        ("embed_identical_texts", _check_embed_identical),
        ("embed_deterministic", _check_embed_deterministic),
        ("embed_empty_list", _check_embed_empty),
        ("train_classify_roundtrip", _check_train_classify),
        ("train_idempotent_request_id", _check_train_idempotent),
        ("classify_shape_and_range", _check_classify),
        ("classify_unknown_model_error", _check_classify_unknown),
        ("train_score_roundtrip", _check_train_score),
        ("score_pairs_shape", _check_score_shape),
        ("score_pairs_deterministic", _check_score_deterministic),
        ("train_malformed_row_names_index", _check_train_malformed),
    ]


def _post(client: httpx.Client, path: str, payload: dict) -> httpx.Response:
    body = dict(payload)
    body.setdefault("request_id", uuid.uuid4().hex)
    return client.post(path, json=body)


def _json(response: httpx.Response) -> dict:
    _require(
        response.headers.get("content-type", "").startswith("application/json"),
        f"non-JSON response: {response.headers.get('content-type')!r}",
    )
    doc = response.json()
    _require(isinstance(doc, dict), f"body is not an object: {doc!r}")
    return doc


def _check_health(client, ctx, tag):
    response = client.get("/v1/health")
    _require(response.status_code == 200, f"status {response.status_code}")
    doc = _json(response)
    _require(doc.get("status") == "ok", f"status field: {doc.get('status')!r}")
    _require(isinstance(doc.get("models"), list), "models must be a list")


def _check_embed_shape(client, ctx, tag):
    response = _post(client, "/v1/embed", {"texts": _EMBED_TEXTS})
    _require(response.status_code == 200, f"status {response.status_code}")
    doc = _json(response)
    dim = doc.get("dim")
    vectors = doc.get("vectors")
    _require(isinstance(dim, int) and dim >= 1, f"bad dim: {dim!r}")
    _require(
        isinstance(vectors, list) and len(vectors) == len(_EMBED_TEXTS),
        f"expected {len(_EMBED_TEXTS)} vectors",
    )
    for i, vec in enumerate(vectors):
        _require(isinstance(vec, list) and len(vec) == dim, f"vector {i} length != dim")
        _require(
            all(isinstance(x, (int, float)) for x in vec), f"vector {i} not numeric"
        )


def _check_embed_identical(client, ctx, tag):
    doc = _json(_post(client, "/v1/embed", {"texts": ["same text", "same text"]}))
    vectors = doc["vectors"]
    _require(_close_lists(vectors[0], vectors[1], 0.0), "identical texts differ")


def _check_embed_deterministic(client, ctx, tag):
    first = _json(_post(client, "/v1/embed", {"texts": _EMBED_TEXTS}))["vectors"]
    second = _json(_post(client, "/v1/embed", {"texts": _EMBED_TEXTS}))["vectors"]
    for a, b in zip(first, second):
        _require(_close_lists(a, b, 1e-6), "repeat call changed vectors")


def _check_embed_empty(client, ctx, tag):
    response = _post(client, "/v1/embed", {"texts": []})
    _require(response.status_code == 200, f"status {response.status_code}")
    _require(_json(response).get("vectors") == [], "expected empty vectors")


def _train_payload(task: str, tag: str) -> dict:
    rows = _CLASSIFY_ROWS if task == "classify" else _SCORE_ROWS
    hyper = {"epochs": 1, "batch_size": 4}
    return {
        "task": task,
        "dataset": rows,
        "hyperparams": hyper,
        "request_id": f"conf-{task}-{tag}",
    }


def _check_train_classify(client, ctx, tag):
    response = client.post("/v1/train", json=_train_payload("classify", tag))
    _require(response.status_code == 200, f"status {response.status_code}")
    model_id = _json(response).get("model_id")
    _require(isinstance(model_id, str) and model_id, f"bad model_id: {model_id!r}")
    ctx["classify_model"] = model_id


def _check_train_idempotent(client, ctx, tag):
    response = client.post("/v1/train", json=_train_payload("classify", tag))
    _require(response.status_code == 200, f"status {response.status_code}")
    model_id = _json(response).get("model_id")
    _require(
        model_id == ctx.get("classify_model"),
        f"retried request_id yielded {model_id!r}, first gave {ctx.get('classify_model')!r}",
    )
    health = _json(client.get("/v1/health"))
    ids = [m.get("model_id") for m in health.get("models", []) if isinstance(m, dict)]
    _require(ids.count(model_id) == 1, "retried training registered a second model")


def _check_classify(client, ctx, tag):
    texts = ["missiles hit the power plant", "my dog likes carrots"]
    doc = _json(
        _post(
            client,
            "/v1/classify",
            {"model_id": ctx["classify_model"], "texts": texts},
        )
    )
    probs = doc.get("probs")
    _require(isinstance(probs, list) and len(probs) == 2, "expected 2 probs")
    for i, p in enumerate(probs):
        _require(
            isinstance(p, (int, float)) and 0.0 <= float(p) <= 1.0,
            f"prob {i} out of range: {p!r}",
        )


def _check_classify_unknown(client, ctx, tag):
    response = _post(
        client, "/v1/classify", {"model_id": f"missing-{tag}", "texts": ["x y"]}
    )
    _require(
        response.status_code in (400, 404), f"status {response.status_code}"
    )
    doc = _json(response)
    _require("code" in doc and "message" in doc, f"error body lacks code/message: {doc!r}")


def _check_train_score(client, ctx, tag):
    response = client.post("/v1/train", json=_train_payload("score_pairs", tag))
    _require(response.status_code == 200, f"status {response.status_code}")
    model_id = _json(response).get("model_id")
    _require(isinstance(model_id, str) and model_id, f"bad model_id: {model_id!r}")
    ctx["score_model"] = model_id


_SCORE_QUERY = [
    {"left": "the airport was shelled overnight", "right": "overnight shelling hit the airport"},
    {"left": "the airport was shelled overnight", "right": "how to bake sourdough bread"},
    {"left": "the airport was shelled overnight", "right": "overnight shelling hit the airport"},
]


def _check_score_shape(client, ctx, tag):
    doc = _json(
        _post(
            client,
            "/v1/score_pairs",
            {"model_id": ctx["score_model"], "pairs": _SCORE_QUERY},
        )
    )
    scores = doc.get("scores")
    _require(isinstance(scores, list) and len(scores) == 3, "expected 3 scores")
    _require(
        all(isinstance(s, (int, float)) for s in scores), "scores must be numeric"
    )
    _require(
        abs(float(scores[0]) - float(scores[2])) <= 1e-9,
        "identical pairs scored differently",
    )


def _check_score_deterministic(client, ctx, tag):
    payload = {"model_id": ctx["score_model"], "pairs": _SCORE_QUERY}
    first = _json(_post(client, "/v1/score_pairs", payload))["scores"]
    second = _json(_post(client, "/v1/score_pairs", payload))["scores"]
    _require(_close_lists(first, second, 1e-6), "repeat call changed scores")


def _check_train_malformed(client, ctx, tag):
    payload = {
        "task": "classify",
        "dataset": [_CLASSIFY_ROWS[0], {"bogus": True}],
        "hyperparams": {},
        "request_id": f"conf-malformed-{tag}",
    }
    response = client.post("/v1/train", json=payload)
    _require(response.status_code == 400, f"status {response.status_code}")
    doc = _json(response)
    _require("code" in doc and "message" in doc, f"error body lacks code/message: {doc!r}")
    _require("1" in str(doc["message"]), f"message does not name row 1: {doc['message']!r}")
