"""Model registry and config-driven backend construction.

Model ids are whatever the config names them, so they are stable
across restarts by construction; a model's task never changes after
registration. Transformer-backed kinds resolve at startup and turn a
missing package or checkpoint into a ModelLoadError there, not into a
surprise mid-request.
"""

from __future__ import annotations

import dataclasses
import json
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

from .textmodels import HashEncoder, OverlapCrossScorer, TfidfLogisticClassifier

TASK_CLASSIFY = "classify"
TASK_SCORE_PAIRS = "score_pairs"


class ConfigError(ValueError):
    """The server configuration is malformed."""


class ModelLoadError(RuntimeError):
    """A configured backend could not be constructed at startup."""


@dataclass
class ModelEntry:
    model_id: str
    task: str
    handle: Any
    # The local backends are plain Python and safe to share, but the
    # registry hands out a per-model lock anyway so configured backends
    # that are not thread-safe stay single-threaded under load.
    lock: threading.Lock = field(default_factory=threading.Lock)


class ModelRegistry:
    def __init__(self):
        self._entries: dict[str, ModelEntry] = {}
        self._lock = threading.Lock()

    def add(self, model_id: str, task: str, handle: Any) -> ModelEntry:
        if not model_id:
            raise ValueError("model_id must be non-empty")
        if task not in (TASK_CLASSIFY, TASK_SCORE_PAIRS):
            raise ValueError(f"unknown task {task!r}")
        with self._lock:
            if model_id in self._entries:
                raise ValueError(f"model {model_id!r} already registered")
            entry = ModelEntry(model_id, task, handle)
            self._entries[model_id] = entry
            return entry

    def get(self, model_id: str) -> Optional[ModelEntry]:
        with self._lock:
            return self._entries.get(model_id)

    def inventory(self) -> list[dict[str, str]]:
        with self._lock:
            return [
                {"model_id": model_id, "task": self._entries[model_id].task}
                for model_id in sorted(self._entries)
            ]

    def __len__(self) -> int:
        with self._lock:
            return len(self._entries)


def _default_models() -> tuple[dict, ...]:
    return (
        {"model_id": "classify-base", "task": "classify", "kind": "tfidf_logistic"},
        {"model_id": "score-base", "task": "score_pairs", "kind": "token_overlap"},
    )


@dataclass(frozen=True)
class ServerConfig:
    host: str = "127.0.0.1"
    port: int = 8200
    # When set, every POST route requires "Authorization: Bearer <token>".
    token: Optional[str] = None
    embed: dict = field(default_factory=lambda: {"kind": "hash", "dim": 256})
    models: tuple = field(default_factory=_default_models)
    max_train_rows: int = 200_000

    def __post_init__(self):
        if self.max_train_rows < 1:
            raise ConfigError("max_train_rows must be >= 1")


def load_config(path) -> ServerConfig:
    doc = json.loads(Path(path).read_text("utf-8"))
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    known = {f.name for f in dataclasses.fields(ServerConfig)}
    extra = sorted(set(doc) - known)
    if extra:
        raise ConfigError(f"unknown config keys: {extra}")
    if "models" in doc:
        if not isinstance(doc["models"], list):
            raise ConfigError("models must be a list")
        doc["models"] = tuple(doc["models"])
    return ServerConfig(**doc)


def build_encoder(spec: dict) -> Any:
    kind = spec.get("kind", "hash")
    if kind == "hash":
        dim = spec.get("dim", 256)
        if not isinstance(dim, int) or isinstance(dim, bool) or dim < 1:
            raise ConfigError("embed dim must be a positive integer")
        return HashEncoder(dim)
    if kind == "sentence_transformer":
        return _load_sentence_transformer(spec)
    raise ConfigError(f"unknown embed backend kind {kind!r}")


def build_model(spec: dict) -> tuple[str, str, Any]:
    model_id = spec.get("model_id")
    task = spec.get("task")
    kind = spec.get("kind")
    if not isinstance(model_id, str) or not model_id:
        raise ConfigError("each model needs a non-empty model_id")
    if task == TASK_CLASSIFY:
        if kind == "tfidf_logistic":
            return model_id, task, TfidfLogisticClassifier()
        if kind == "hf_classifier":
            return model_id, task, _load_hf_classifier(spec)
    elif task == TASK_SCORE_PAIRS:
        if kind == "token_overlap":
            return model_id, task, OverlapCrossScorer()
        if kind == "hf_cross_encoder":
            return model_id, task, _load_hf_cross_encoder(spec)
    else:
        raise ConfigError(f"model {model_id!r}: unknown task {task!r}")
    raise ConfigError(f"model {model_id!r}: kind {kind!r} does not serve task {task!r}")


def build_registry(config: ServerConfig) -> tuple[Any, ModelRegistry]:
    encoder = build_encoder(dict(config.embed))
    registry = ModelRegistry()
    for spec in config.models:
        if not isinstance(spec, dict):
            raise ConfigError("each models entry must be an object")
        model_id, task, handle = build_model(dict(spec))
        try:
            registry.add(model_id, task, handle)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
    return encoder, registry


def _checkpoint(spec: dict, kind: str) -> str:
    checkpoint = spec.get("checkpoint")
    if not isinstance(checkpoint, str) or not checkpoint:
        raise ConfigError(f"backend {kind!r} needs a checkpoint")
    return checkpoint


def _load_sentence_transformer(spec: dict) -> Any:
    checkpoint = _checkpoint(spec, "sentence_transformer")
    try:
        from sentence_transformers import SentenceTransformer
    except ImportError as exc:
        raise ModelLoadError(
            "embed backend 'sentence_transformer' needs the "
            "sentence-transformers package"
        ) from exc
    try:
        model = SentenceTransformer(checkpoint)
    except Exception as exc:
        raise ModelLoadError(
            f"could not load encoder checkpoint {checkpoint!r}: {exc}"
        ) from exc
    return _SentenceEncoder(model)


class _SentenceEncoder:
    def __init__(self, model):
        self._model = model
        self.dim = int(model.get_sentence_embedding_dimension())

    def encode(self, texts):
        vectors = self._model.encode(
            list(texts), convert_to_numpy=True, show_progress_bar=False
        )
        return [[float(x) for x in row] for row in vectors]


def _load_hf_classifier(spec: dict) -> Any:
    checkpoint = _checkpoint(spec, "hf_classifier")
    try:
        from transformers import AutoModelForSequenceClassification, AutoTokenizer
    except ImportError as exc:
        raise ModelLoadError(
            "classify backend 'hf_classifier' needs the transformers package"
        ) from exc
    try:
        tokenizer = AutoTokenizer.from_pretrained(checkpoint)
        model = AutoModelForSequenceClassification.from_pretrained(checkpoint)
    except Exception as exc:
        raise ModelLoadError(
            f"could not load classifier checkpoint {checkpoint!r}: {exc}"
        ) from exc
    model.eval()
    return _HfClassifier(tokenizer, model)


class _HfClassifier:
    def __init__(self, tokenizer, model):
        self._tokenizer = tokenizer
        self._model = model

    def predict(self, texts):
        import torch

        with torch.no_grad():
            encoded = self._tokenizer(
                list(texts), padding=True, truncation=True, return_tensors="pt"
            )
            logits = self._model(**encoded).logits
            # Binary heads put the positive class last.
            probs = torch.softmax(logits, dim=-1)[:, -1]
        return [float(p) for p in probs]


def _load_hf_cross_encoder(spec: dict) -> Any:
    checkpoint = _checkpoint(spec, "hf_cross_encoder")
    try:
        from sentence_transformers import CrossEncoder
    except ImportError as exc:
        raise ModelLoadError(
            "score backend 'hf_cross_encoder' needs the "
            "sentence-transformers package"
        ) from exc
    try:
        model = CrossEncoder(checkpoint)
    except Exception as exc:
        raise ModelLoadError(
            f"could not load cross-encoder checkpoint {checkpoint!r}: {exc}"
        ) from exc
    return _HfCrossScorer(model)


class _HfCrossScorer:
    def __init__(self, model):
        self._model = model

    def score(self, pairs):
        raw = self._model.predict(
            [[left, right] for left, right in pairs], show_progress_bar=False
        )
        return [float(s) for s in raw]
