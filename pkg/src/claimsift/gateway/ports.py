"""Adapters that plug the gateway client into the pipeline's ports.

These are the remote counterparts of the local hash encoder, the TF-IDF
logistic detector, and the lexical rankers: same interfaces, inference
delegated over the wire.
"""

from __future__ import annotations

from typing import Mapping, Optional, Sequence

import numpy as np

from ..detection import CLAIM, DetectionDataset
from ..retrieval import POSITIVE, RetrievalDataset
from .client import GatewayClient, RemoteModelRef, TASK_CLASSIFY, TASK_SCORE_PAIRS

# Fine-tuning defaults forwarded opaquely to the server.
DETECTOR_FINETUNE = {"epochs": 5, "batch_size": 20}
PAIR_SCORER_FINETUNE = {"epochs": 3, "batch_size": 16}


class GatewayEncoder:
    """EncoderPort over /v1/embed; dimension discovered from the server."""

    def __init__(self, client: GatewayClient):
        self._client = client
        self._dim: Optional[int] = None

    @property
    def dim(self) -> int:
        if self._dim is None:
            probe = self._client.embed(["dimension probe"])
            self._dim = len(probe[0])
        return self._dim

    def encode(self, texts: Sequence[str]) -> np.ndarray:
        vectors = self._client.embed(list(texts))
        if not vectors:
            return np.zeros((0, self.dim), dtype=np.float64)
        arr = np.asarray(vectors, dtype=np.float64)
        self._dim = arr.shape[1]
        return arr


class GatewayDetector:
    """DetectorModel over /v1/classify."""

    def __init__(self, client: GatewayClient, model: RemoteModelRef):
        self._client = client
        self.model = model

    def predict_proba(self, texts: Sequence[str]) -> list[float]:
        return self._client.classify(self.model, list(texts))


class GatewayClassifierPort:
    """ClassifierPort that fine-tunes remotely and classifies over the wire."""

    def __init__(
        self,
        client: GatewayClient,
        hyperparams: Optional[dict] = None,
        request_id: Optional[str] = None,
    ):
        self._client = client
        self._hyperparams = dict(hyperparams or DETECTOR_FINETUNE)
        self._request_id = request_id

    def fit(
        self, train: DetectionDataset, valid: Optional[DetectionDataset] = None
    ) -> GatewayDetector:
        rows = [
            {"text": item.text, "label": 1 if item.label == CLAIM else 0}
            for item in train.items
        ]
        ref = self._client.train(
            TASK_CLASSIFY, rows, self._hyperparams, request_id=self._request_id
        )
        return GatewayDetector(self._client, ref)


class GatewayRanker:
    """RankerPort that fine-tunes a remote pair scorer; fit returns a new
    ranker bound to the trained model, leaving this one reusable."""

    def __init__(
        self,
        client: GatewayClient,
        hyperparams: Optional[dict] = None,
        model: Optional[RemoteModelRef] = None,
        request_id: Optional[str] = None,
    ):
        self._client = client
        self._hyperparams = dict(hyperparams or PAIR_SCORER_FINETUNE)
        self.model = model
        self._request_id = request_id

    def fit(
        self,
        dataset: RetrievalDataset,
        tweet_texts: Mapping[str, str],
        claim_texts: Mapping[str, str],
    ) -> "GatewayRanker":
        rows = [
            {
                "left": tweet_texts[pair.tweet_id],
                "right": claim_texts[pair.claim_id],
                "label": 1 if pair.label == POSITIVE else 0,
            }
            for pair in dataset.pairs
        ]
        ref = self._client.train(
            TASK_SCORE_PAIRS, rows, self._hyperparams, request_id=self._request_id
        )
        return GatewayRanker(self._client, self._hyperparams, model=ref)

    def score(self, tweet_text: str, claim_text: str) -> float:
        return self.score_batch([(tweet_text, claim_text)])[0]

    def score_batch(self, pairs: Sequence[tuple[str, str]]) -> list[float]:
        if self.model is None:
            raise ValueError("ranker is unfitted: call fit first or pass a model ref")
        return self._client.score_pairs(self.model, list(pairs))
