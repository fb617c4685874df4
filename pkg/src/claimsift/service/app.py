"""HTTP service: prediction endpoint plus the annotation API.

Claim and tweet corpora are read-only here; the annotation store is the
single mutable surface, and every write goes through one lock. Labeling
work is handed out under short exclusive leases so concurrent annotators
never see the same pair.
"""

from __future__ import annotations

import datetime as dt
import threading
import time
from pathlib import Path
from typing import Callable, Optional

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse, Response
from fastapi.staticfiles import StaticFiles

from ..candidates import PairPool
from ..corpus import TERMINAL_LABELS, AnnotationStore, Tweet, TweetKind
from ..detection import DetectorModel
from ..retrieval import RankerPort, run_pipeline
from .schemas import (
    LabelRequest,
    LabelResponse,
    NextPairResponse,
    PredictRequest,
    PredictResponse,
    ProgressResponse,
    RankedResultBody,
)

DEFAULT_LEASE_TTL_SECONDS = 600.0

UTC = dt.timezone.utc


class ServiceState:
    """Everything the routes touch, wired once at startup.

    `clock` is monotonic seconds and injectable so lease expiry is
    testable without sleeping.
    """

    def __init__(
        self,
        store: AnnotationStore,
        pool: Optional[PairPool] = None,
        detector: Optional[DetectorModel] = None,
        ranker: Optional[RankerPort] = None,
        lease_ttl_seconds: float = DEFAULT_LEASE_TTL_SECONDS,
        top_n: int = 3,
        threshold: float = 0.5,
        annotations_path: Optional[str] = None,
        console_dir: Optional[str] = None,
        clock: Callable[[], float] = time.monotonic,
    ):
        if lease_ttl_seconds <= 0:
            raise ValueError("lease_ttl_seconds must be > 0")
        self.store = store
        self.detector = detector
        self.ranker = ranker
        self.lease_ttl_seconds = lease_ttl_seconds
        self.top_n = top_n
        self.threshold = threshold
        self.annotations_path = annotations_path
        self.console_dir = console_dir
        self.clock = clock
        self.lock = threading.Lock()
        # (tweet_id, claim_id) -> (annotator, expires_at in clock seconds)
        self.leases: dict[tuple[str, str], tuple[str, float]] = {}
        self.pair_meta: dict[tuple[str, str], tuple[int, float]] = {}
        self.serve_order: list[tuple[str, str]] = []
        if pool is not None:
            for entry in sorted(
                pool.entries, key=lambda e: (e.rank, e.claim_id, e.tweet_id)
            ):
                store.seed_pair(entry.tweet_id, entry.claim_id)
                key = (entry.tweet_id, entry.claim_id)
                self.pair_meta[key] = (entry.rank, entry.similarity)
                self.serve_order.append(key)
        if annotations_path and Path(annotations_path).exists():
            store.import_jsonl(annotations_path)

    def persist(self) -> None:
        if self.annotations_path:
            self.store.export_jsonl(self.annotations_path)

    def _purge_expired(self) -> None:
        now = self.clock()
        for key in [k for k, (_, exp) in self.leases.items() if exp <= now]:
            del self.leases[key]

    def _labeled(self, key: tuple[str, str]) -> bool:
        pair = self.store.get(*key)
        return pair is not None and pair.label in TERMINAL_LABELS

    def next_pair(self, annotator: str) -> Optional[tuple[str, str, float]]:
        """Lowest-ranked unlabeled pair available to this annotator, or None.

        The annotator's current lease is re-served (and refreshed) if its
        pair is still unlabeled; otherwise a fresh pair is leased and any
        other lease they held is dropped.
        """
        with self.lock:
            self._purge_expired()
            expires = self.clock() + self.lease_ttl_seconds
            for key, (holder, _) in self.leases.items():
                if holder == annotator and not self._labeled(key):
                    self.leases[key] = (annotator, expires)
                    return key[0], key[1], self.lease_ttl_seconds
            for key in list(self.leases):
                if self.leases[key][0] == annotator:
                    del self.leases[key]
            for key in self.serve_order:
                if self._labeled(key) or key in self.leases:
                    continue
                self.leases[key] = (annotator, expires)
                return key[0], key[1], self.lease_ttl_seconds
            return None

    def record_label(
        self, tweet_id: str, claim_id: str, body: LabelRequest
    ) -> tuple[int, dict]:
        """Label a pair; (status, payload). 409 unless first write or relabel."""
        key = (tweet_id, claim_id)
        with self.lock:
            pair = self.store.get(tweet_id, claim_id)
            if pair is None:
                return 404, {
                    "code": "unknown_pair",
                    "message": f"no pair {tweet_id}/{claim_id}",
                }
            if pair.label in TERMINAL_LABELS and not body.relabel:
                return 409, {
                    "code": "already_labeled",
                    "message": f"pair {tweet_id}/{claim_id} already carries "
                    f"label {pair.label.value!r}",
                }
            updated = self.store.record(tweet_id, claim_id, body.label, body.annotator)
            self.leases.pop(key, None)
            self.persist()
        return 200, LabelResponse(
            tweet_id=updated.tweet_id,
            claim_id=updated.claim_id,
            label=updated.label.value,
            annotator=updated.annotator,
            labeled_at=(
                updated.labeled_at.isoformat() if updated.labeled_at else None
            ),
        ).model_dump()

    def progress(self) -> ProgressResponse:
        with self.lock:
            pairs = self.store.pairs()
            per_annotator: dict[str, int] = {}
            labeled = relevant = 0
            claims_covered: set[str] = set()
            for pair in pairs:
                if pair.label in TERMINAL_LABELS:
                    labeled += 1
                    if pair.annotator:
                        per_annotator[pair.annotator] = (
                            per_annotator.get(pair.annotator, 0) + 1
                        )
                    if pair.label.value == "relevant":
                        relevant += 1
                        claims_covered.add(pair.claim_id)
            return ProgressResponse(
                labeled=labeled,
                total=len(pairs),
                relevant=relevant,
                not_relevant=labeled - relevant,
                per_annotator=dict(sorted(per_annotator.items())),
                claims_covered=len(claims_covered),
                claims_total=len(self.store.claims),
            )


def _error(status: int, code: str, message: str) -> JSONResponse:
    return JSONResponse({"code": code, "message": message}, status_code=status)


def create_app(state: ServiceState) -> FastAPI:
    app = FastAPI(title="claimsift service")
    app.state.service = state

    @app.exception_handler(RequestValidationError)
    async def on_validation_error(request: Request, exc: RequestValidationError):
        first = exc.errors()[0] if exc.errors() else {}
        where = ".".join(str(p) for p in first.get("loc", ()))
        return _error(400, "validation_error", f"{where}: {first.get('msg', 'invalid')}")

    @app.get("/healthz")
    async def healthz():
        return {"status": "ok"}

    @app.post("/predict", response_model=PredictResponse)
    async def predict(body: PredictRequest):
        if not body.text.strip():
            return _error(400, "empty_text", "text must be non-empty")
        if state.detector is None or state.ranker is None:
            return _error(503, "models_not_loaded", "prediction models not loaded")
        tweet = Tweet(
            id="adhoc",
            text=body.text,
            created_at=dt.datetime.now(UTC),
            lang="en",
            kind=TweetKind.ORIGINAL,
        )
        record = run_pipeline(
            state.detector,
            state.ranker,
            tweet,
            list(state.store.claims),
            top_n=state.top_n,
            threshold=state.threshold,
        )
        return PredictResponse(
            gate=record.gate,
            gate_probability=record.gate_probability,
            results=[
                RankedResultBody(claim_id=r.claim_id, score=r.score, rank=r.rank)
                for r in record.results
            ],
        )

    @app.get("/pairs/next")
    async def pairs_next(annotator: str = ""):
        if not annotator.strip():
            return _error(400, "missing_annotator", "annotator query param required")
        served = state.next_pair(annotator.strip())
        if served is None:
            return Response(status_code=204)
        tweet_id, claim_id, ttl = served
        rank, similarity = state.pair_meta.get((tweet_id, claim_id), (0, 0.0))
        claim = state.store.claims[claim_id]
        expires_at = dt.datetime.now(UTC) + dt.timedelta(seconds=ttl)
        return NextPairResponse(
            tweet_id=tweet_id,
            claim_id=claim_id,
            tweet_text=state.store.tweets[tweet_id].text,
            claim_text=claim.text,
            claim_verdict=claim.verdict.value,
            similarity=similarity,
            rank=rank,
            lease_expires_at=expires_at.isoformat(),
        ).model_dump()

    @app.post("/pairs/{tweet_id}/{claim_id}/label")
    async def label_pair(tweet_id: str, claim_id: str, body: LabelRequest):
        status, payload = state.record_label(tweet_id, claim_id, body)
        return JSONResponse(payload, status_code=status)

    @app.get("/progress", response_model=ProgressResponse)
    async def progress():
        return state.progress()

    console_dir = state.console_dir
    if console_dir and Path(console_dir).is_dir():
        app.mount(
            "/console", StaticFiles(directory=console_dir, html=True), name="console"
        )
    else:

        @app.get("/console")
        async def console_missing():
            return _error(
                404,
                "console_not_built",
                "no console bundle configured; build the frontend and pass its dist directory",
            )

    return app
