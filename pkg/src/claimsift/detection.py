"""The claim-detection gate: binary classifiers behind a port.

A tweet is labeled positive iff the annotation store ties it to at least
one relevant claim. Class imbalance is handled by random oversampling of
the minority class — applied to training folds only, never to validation
or test data.
"""

from __future__ import annotations

import json
import logging
import math
import os
import random
from dataclasses import dataclass, field
from typing import Optional, Protocol, Sequence

import numpy as np
from scipy import sparse

from . import textproc
from .corpus import AnnotationStore, Label
from .errors import ModelFormatError, SingleClassError
from .textproc import TfIdfModel, fit_tfidf, tokenize

log = logging.getLogger(__name__)

CLAIM = "claim"
NO_CLAIM = "no_claim"

DETECTOR_MAGIC = b"CSDETEC1"


@dataclass(frozen=True)
class DetectionItem:
    tweet_id: str
    text: str
    label: str

    def __post_init__(self):
        if self.label not in (CLAIM, NO_CLAIM):
            raise ValueError(f"label must be {CLAIM!r} or {NO_CLAIM!r}")


@dataclass
class DetectionDataset:
    items: list[DetectionItem]
    excluded_unlabeled: int = 0

    def __len__(self) -> int:
        return len(self.items)

    def counts(self) -> dict[str, int]:
        out = {CLAIM: 0, NO_CLAIM: 0}
        for item in self.items:
            out[item.label] += 1
        return out

    def subset(self, tweet_ids: Sequence[str]) -> "DetectionDataset":
        wanted = set(tweet_ids)
        return DetectionDataset([i for i in self.items if i.tweet_id in wanted])


def build_detection_dataset(store: AnnotationStore) -> DetectionDataset:
    """Binary dataset from the annotation store.

    A tweet is `claim` iff it has >= 1 relevant pair; tweets whose pairs
    all carry terminal not-relevant labels are `no_claim`. Tweets with only
    unlabeled pairs are excluded and counted in a warning.
    """
    relevant: dict[str, int] = {}
    labeled: dict[str, int] = {}
    for pair in store.pairs():
        relevant.setdefault(pair.tweet_id, 0)
        labeled.setdefault(pair.tweet_id, 0)
        if pair.label == Label.RELEVANT:
            relevant[pair.tweet_id] += 1
            labeled[pair.tweet_id] += 1
        elif pair.label == Label.NOT_RELEVANT:
            labeled[pair.tweet_id] += 1
    items: list[DetectionItem] = []
    excluded = 0
    for tweet_id in relevant:
        if labeled[tweet_id] == 0:
            excluded += 1
            continue
        label = CLAIM if relevant[tweet_id] > 0 else NO_CLAIM
        items.append(DetectionItem(tweet_id, store.tweets[tweet_id].text, label))
    if excluded:
        log.warning("excluded %d tweets with only unlabeled pairs", excluded)
    return DetectionDataset(items, excluded_unlabeled=excluded)


def oversample_minority(dataset: DetectionDataset, seed: int) -> DetectionDataset:
    """Duplicate minority items (sampling with replacement) to exact balance.

    The majority class is untouched; the output order is shuffled
    deterministically by seed. The result is always a multiset superset of
    the input.
    """
    counts = dataset.counts()
    if counts[CLAIM] == 0 or counts[NO_CLAIM] == 0:
        raise SingleClassError("oversampling needs both classes present")
    minority = CLAIM if counts[CLAIM] < counts[NO_CLAIM] else NO_CLAIM
    deficit = abs(counts[CLAIM] - counts[NO_CLAIM])
    rng = random.Random(seed)
    minority_items = [i for i in dataset.items if i.label == minority]
    extras = [rng.choice(minority_items) for _ in range(deficit)]
    items = list(dataset.items) + extras
    rng.shuffle(items)
    return DetectionDataset(items)


class DetectorModel(Protocol):
    def predict_proba(self, texts: Sequence[str]) -> list[float]: ...


class ClassifierPort(Protocol):
    def fit(self, train: DetectionDataset, valid: DetectionDataset) -> DetectorModel: ...


@dataclass
class DetectionResult:
    label: str
    probability: float


def train_detector(
    port: ClassifierPort, train: DetectionDataset, valid: DetectionDataset
) -> DetectorModel:
    if not train.items:
        raise ValueError("training set is empty")
    counts = train.counts()
    if counts[CLAIM] == 0 or counts[NO_CLAIM] == 0:
        raise SingleClassError("training set must contain both classes")
    return port.fit(train, valid)


def detect(model: DetectorModel, text: str, threshold: float = 0.5) -> DetectionResult:
    """Gate decision: `claim` iff probability >= threshold."""
    probability = float(model.predict_proba([text])[0])
    label = CLAIM if probability >= threshold else NO_CLAIM
    return DetectionResult(label=label, probability=probability)


@dataclass
class ClassMetrics:
    precision: float
    recall: float
    f1: float


@dataclass
class PerClassMetrics:
    per_class: dict[str, ClassMetrics]
    accuracy: float
    flags: list[str] = field(default_factory=list)

    def flat(self) -> dict[str, float]:
        out: dict[str, float] = {}
        for cls, m in self.per_class.items():
            out[f"precision_{cls}"] = m.precision
            out[f"recall_{cls}"] = m.recall
            out[f"f1_{cls}"] = m.f1
        out["accuracy"] = self.accuracy
        return out


def evaluate_detector(
    model: DetectorModel, test: DetectionDataset, threshold: float = 0.5
) -> PerClassMetrics:
    """Confusion-matrix metrics for both classes; positive class is `claim`.

    Precision with zero predicted positives is reported as 0.0 and flagged
    rather than raising.
    """
    if not test.items:
        raise ValueError("test set is empty")
    probs = model.predict_proba([i.text for i in test.items])
    predicted = [CLAIM if p >= threshold else NO_CLAIM for p in probs]
    actual = [i.label for i in test.items]
    flags: list[str] = []
    per_class: dict[str, ClassMetrics] = {}
    correct = sum(1 for p, a in zip(predicted, actual) if p == a)
    for cls in (CLAIM, NO_CLAIM):
        tp = sum(1 for p, a in zip(predicted, actual) if p == cls and a == cls)
        fp = sum(1 for p, a in zip(predicted, actual) if p == cls and a != cls)
        fn = sum(1 for p, a in zip(predicted, actual) if p != cls and a == cls)
        if tp + fp == 0:
            precision = 0.0
            flags.append(f"no predicted {cls}: precision undefined, reported 0.0")
        else:
            precision = tp / (tp + fp)
        recall = tp / (tp + fn) if tp + fn else 0.0
        f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
        per_class[cls] = ClassMetrics(precision, recall, f1)
    return PerClassMetrics(
        per_class=per_class, accuracy=correct / len(actual), flags=flags
    )


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _vectorize(model: TfIdfModel, texts: Sequence[str]) -> sparse.csr_matrix:
    rows, cols, vals = [], [], []
    for r, text in enumerate(texts):
        vec = textproc.tfidf_vector(model, text)
        rows.extend([r] * len(vec))
        cols.extend(vec.indices)
        vals.extend(vec.weights)
    return sparse.csr_matrix(
        (vals, (rows, cols)), shape=(len(texts), len(model.vocabulary))
    )


class TfidfLogisticModel:
    """TF-IDF features under an L2-regularized logistic head."""

    def __init__(self, tfidf: TfIdfModel, weights: np.ndarray, bias: float):
        self.tfidf = tfidf
        self.weights = np.asarray(weights, dtype=np.float64)
        self.bias = float(bias)

    def predict_proba(self, texts: Sequence[str]) -> list[float]:
        features = _vectorize(self.tfidf, texts)
        z = features @ self.weights + self.bias
        return [float(p) for p in _sigmoid(np.asarray(z))]

    def save(self, path: str | os.PathLike) -> None:
        payload = {
            "vocabulary": dict(self.tfidf.vocabulary),
            "idf": list(self.tfidf.idf),
            "doc_count": self.tfidf.doc_count,
            "weights": self.weights.tolist(),
            "bias": self.bias,
        }
        with open(path, "wb") as fh:
            fh.write(DETECTOR_MAGIC)
            fh.write(json.dumps(payload, sort_keys=True).encode("utf-8"))

    @classmethod
    def load(cls, path: str | os.PathLike) -> "TfidfLogisticModel":
        with open(path, "rb") as fh:
            header = fh.read(8)
            if header != DETECTOR_MAGIC:
                raise ModelFormatError(
                    f"{path}: expected header {DETECTOR_MAGIC!r}, found {header!r}"
                )
            payload = json.loads(fh.read().decode("utf-8"))
        tfidf = TfIdfModel(
            vocabulary=payload["vocabulary"],
            idf=tuple(payload["idf"]),
            doc_count=payload["doc_count"],
        )
        return cls(tfidf, np.asarray(payload["weights"]), payload["bias"])


class TfidfLogisticPort:
    """Native baseline: batch gradient descent, fixed iteration cap.

    Weights start at zero and the full batch is used every step, so
    training is deterministic: identical data always yields identical
    weights. The validation split is accepted for port compatibility but
    unused (no early stopping).
    """

    def __init__(
        self,
        learning_rate: float = 2.0,
        l2: float = 1e-4,
        iterations: int = 300,
    ):
        self.learning_rate = learning_rate
        self.l2 = l2
        self.iterations = iterations

    def fit(
        self, train: DetectionDataset, valid: Optional[DetectionDataset] = None
    ) -> TfidfLogisticModel:
        texts = [i.text for i in train.items]
        y = np.asarray(
            [1.0 if i.label == CLAIM else 0.0 for i in train.items], dtype=np.float64
        )
        tfidf = fit_tfidf([tokenize(t) for t in texts])
        features = _vectorize(tfidf, texts)
        n, v = features.shape
        weights = np.zeros(v, dtype=np.float64)
        bias = 0.0
        for _ in range(self.iterations):
            p = _sigmoid(np.asarray(features @ weights + bias))
            err = p - y
            grad_w = features.T @ err / n + self.l2 * weights
            grad_b = float(np.mean(err))
            weights -= self.learning_rate * grad_w
            bias -= self.learning_rate * grad_b
        return TfidfLogisticModel(tfidf, weights, bias)
