"""Deterministic local model backends.

The shipped server answers every route with these: a feature-hash
encoder for /v1/embed, a tf-idf logistic classifier for /v1/classify,
and an idf-weighted token-overlap scorer for /v1/score_pairs. They are
CPU-cheap and seed-free; identical inputs always give identical
outputs, which the protocol's determinism checks depend on.
Transformer-backed alternatives live behind config keys in registry.py.
"""

from __future__ import annotations

import hashlib
import math
import random
import re
from collections import Counter
from typing import Sequence

_TOKEN = re.compile(r"[a-z0-9']+")


def tokenize(text: str) -> list[str]:
    return _TOKEN.findall(text.lower())


def sigmoid(z: float) -> float:
    # Clamped so exp never overflows; 1e-26 of probability is noise here.
    if z >= 0:
        return 1.0 / (1.0 + math.exp(-z)) if z < 60.0 else 1.0
    return math.exp(z) / (1.0 + math.exp(z)) if z > -60.0 else 0.0


def smoothed_idf(doc_count: int, df: Counter) -> dict[str, float]:
    """idf = ln((1 + N) / (1 + df)) + 1; never zero, never negative."""
    return {
        token: math.log((1 + doc_count) / (1 + seen)) + 1.0
        for token, seen in df.items()
    }


class HashEncoder:
    """Feature hashing into a fixed-width unit vector.

    Bucket and sign come from a blake2b digest of the token, so the
    mapping is stable across processes, platforms, and restarts.
    """

    def __init__(self, dim: int = 256):
        if dim < 1:
            raise ValueError("dim must be >= 1")
        self.dim = dim

    def _slot(self, token: str) -> tuple[int, float]:
        digest = hashlib.blake2b(token.encode("utf-8"), digest_size=9).digest()
        bucket = int.from_bytes(digest[:8], "big") % self.dim
        sign = 1.0 if digest[8] & 1 else -1.0
        return bucket, sign

    def encode_one(self, text: str) -> list[float]:
        vec = [0.0] * self.dim
        for token, count in Counter(tokenize(text)).items():
            bucket, sign = self._slot(token)
            vec[bucket] += sign * count
        norm = math.sqrt(sum(x * x for x in vec))
        if norm > 0.0:
            vec = [x / norm for x in vec]
        return vec

    def encode(self, texts: Sequence[str]) -> list[list[float]]:
        return [self.encode_one(text) for text in texts]


class TfidfLogisticClassifier:
    """TF-IDF features into a logistic head, trained with minibatch SGD.

    Untrained, the head is all zeros and every text gets probability
    0.5; the model only becomes opinionated through fit. Training is
    deterministic because each epoch shuffles with an epoch-seeded RNG.
    """

    def __init__(self, learning_rate: float = 1.0, l2: float = 1e-4):
        if learning_rate <= 0.0:
            raise ValueError("learning_rate must be > 0")
        self.learning_rate = learning_rate
        self.l2 = l2
        self.idf: dict[str, float] = {}
        self.weights: dict[str, float] = {}
        self.bias = 0.0

    def _vector(self, text: str) -> dict[str, float]:
        counts = Counter(tokenize(text))
        if self.idf:
            vec = {t: c * self.idf[t] for t, c in counts.items() if t in self.idf}
        else:
            vec = {t: float(c) for t, c in counts.items()}
        norm = math.sqrt(sum(v * v for v in vec.values()))
        return {t: v / norm for t, v in vec.items()} if norm else {}

    def predict_one(self, text: str) -> float:
        vec = self._vector(text)
        z = self.bias + sum(self.weights.get(t, 0.0) * v for t, v in vec.items())
        return sigmoid(z)

    def predict(self, texts: Sequence[str]) -> list[float]:
        return [self.predict_one(text) for text in texts]

    def fit(
        self,
        rows: Sequence[tuple[str, int]],
        epochs: int = 5,
        batch_size: int = 20,
    ) -> "TfidfLogisticClassifier":
        if not rows:
            raise ValueError("rows must be non-empty")
        if epochs < 1 or batch_size < 1:
            raise ValueError("epochs and batch_size must be >= 1")
        texts = [text for text, _ in rows]
        df: Counter = Counter()
        for text in texts:
            df.update(set(tokenize(text)))
        self.idf = smoothed_idf(len(texts), df)
        self.weights = {}
        self.bias = 0.0
        vectors = [self._vector(text) for text in texts]
        labels = [float(label) for _, label in rows]
        order = list(range(len(rows)))
        for epoch in range(epochs):
            random.Random(epoch).shuffle(order)
            for start in range(0, len(order), batch_size):
                self._step(vectors, labels, order[start : start + batch_size])
        return self

    def _step(
        self,
        vectors: list[dict[str, float]],
        labels: list[float],
        batch: list[int],
    ) -> None:
        grad: dict[str, float] = {}
        grad_bias = 0.0
        for i in batch:
            vec = vectors[i]
            z = self.bias + sum(self.weights.get(t, 0.0) * v for t, v in vec.items())
            err = sigmoid(z) - labels[i]
            grad_bias += err
            for t, v in vec.items():
                grad[t] = grad.get(t, 0.0) + err * v
        scale = self.learning_rate / len(batch)
        self.bias -= scale * grad_bias
        # L2 decays touched weights only; a dense pass per batch would
        # swamp the runtime on large vocabularies.
        for t, g in grad.items():
            w = self.weights.get(t, 0.0)
            self.weights[t] = w - scale * (g + self.l2 * w)


class OverlapCrossScorer:
    """Pair scorer: idf-weighted token overlap through a logistic head.

    The untrained head (gain 4, offset -2) maps overlap 0..1 onto about
    0.12..0.88 and is monotone in the overlap, so a text paired with
    itself never scores below a pairing with unrelated text. fit learns
    idf weights from the training pairs and refits the head.
    """

    def __init__(self, learning_rate: float = 1.0):
        if learning_rate <= 0.0:
            raise ValueError("learning_rate must be > 0")
        self.learning_rate = learning_rate
        self.idf: dict[str, float] = {}
        # Tokens never seen in training count as rarer than anything seen.
        self.unseen_weight = 1.0
        self.gain = 4.0
        self.offset = -2.0

    def _weight(self, token: str) -> float:
        if not self.idf:
            return 1.0
        return self.idf.get(token, self.unseen_weight)

    def similarity(self, left: str, right: str) -> float:
        a, b = set(tokenize(left)), set(tokenize(right))
        if not a and not b:
            return 0.0
        shared = sum(self._weight(t) for t in a & b)
        total = sum(self._weight(t) for t in a | b)
        return shared / total if total else 0.0

    def score_one(self, left: str, right: str) -> float:
        return sigmoid(self.gain * self.similarity(left, right) + self.offset)

    def score(self, pairs: Sequence[tuple[str, str]]) -> list[float]:
        return [self.score_one(left, right) for left, right in pairs]

    def fit(
        self,
        rows: Sequence[tuple[str, str, int]],
        epochs: int = 3,
        batch_size: int = 16,
    ) -> "OverlapCrossScorer":
        if not rows:
            raise ValueError("rows must be non-empty")
        if epochs < 1 or batch_size < 1:
            raise ValueError("epochs and batch_size must be >= 1")
        df: Counter = Counter()
        sides = 0
        for left, right, _ in rows:
            for text in (left, right):
                df.update(set(tokenize(text)))
                sides += 1
        self.idf = smoothed_idf(sides, df)
        self.unseen_weight = math.log(1 + sides) + 1.0
        sims = [self.similarity(left, right) for left, right, _ in rows]
        labels = [float(label) for _, _, label in rows]
        order = list(range(len(rows)))
        for epoch in range(epochs):
            random.Random(epoch).shuffle(order)
            for start in range(0, len(order), batch_size):
                batch = order[start : start + batch_size]
                grad_gain = 0.0
                grad_offset = 0.0
                for i in batch:
                    err = sigmoid(self.gain * sims[i] + self.offset) - labels[i]
                    grad_gain += err * sims[i]
                    grad_offset += err
                scale = self.learning_rate / len(batch)
                self.gain -= scale * grad_gain
                self.offset -= scale * grad_offset
        return self
