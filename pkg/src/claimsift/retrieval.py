"""Claim retrieval: negative-sampled pair datasets, pluggable pair
scorers, claim ranking, HitRatio@K, and the detect-then-retrieve cascade.
"""

from __future__ import annotations

import logging
import math
import random
from collections import Counter
from dataclasses import dataclass
from typing import Mapping, Optional, Protocol, Sequence

from .corpus import AnnotationStore, Claim, Label, Tweet
from .detection import CLAIM, NO_CLAIM, DetectorModel, detect
from .errors import InsufficientClaimsError, PipelineStageError
from .textproc import bm25_term_weight, cosine, fit_tfidf, tfidf_vector, tokenize

log = logging.getLogger(__name__)

POSITIVE = "positive"
NEGATIVE = "negative"

DEFAULT_NEGATIVES_PER_POSITIVE = 10
DEFAULT_TOP_N = 3


class RetrievalPair:
    """One labeled (tweet, claim) training pair.

    Plain slots class rather than a dataclass: these are built tens of
    thousands at a time by the negative sampler and the generated
    __init__/__post_init__ call pair is measurable there.
    """

    __slots__ = ("tweet_id", "claim_id", "label")

    def __init__(self, tweet_id: str, claim_id: str, label: str):
        if label != POSITIVE and label != NEGATIVE:
            raise ValueError(f"label must be {POSITIVE!r} or {NEGATIVE!r}")
        self.tweet_id = tweet_id
        self.claim_id = claim_id
        self.label = label

    def __repr__(self) -> str:
        return (
            f"RetrievalPair(tweet_id={self.tweet_id!r}, "
            f"claim_id={self.claim_id!r}, label={self.label!r})"
        )

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, RetrievalPair)
            and self.tweet_id == other.tweet_id
            and self.claim_id == other.claim_id
            and self.label == other.label
        )

    def __hash__(self) -> int:
        return hash((self.tweet_id, self.claim_id, self.label))


@dataclass
class RetrievalDataset:
    pairs: list[RetrievalPair]

    def __post_init__(self):
        keys = [(pair.tweet_id, pair.claim_id) for pair in self.pairs]
        if len(set(keys)) != len(keys):
            seen: set[tuple[str, str]] = set()
            for key in keys:
                if key in seen:
                    raise ValueError(f"pair {key} appears twice")
                seen.add(key)

    def __len__(self) -> int:
        return len(self.pairs)

    def counts(self) -> dict[str, int]:
        out = {POSITIVE: 0, NEGATIVE: 0}
        for pair in self.pairs:
            out[pair.label] += 1
        return out


def sample_negatives(
    positives: Sequence[tuple[str, str]],
    claim_ids: Sequence[str],
    n: int = DEFAULT_NEGATIVES_PER_POSITIVE,
    seed: int = 0,
    relevant: Optional[Mapping[str, set[str]]] = None,
    per_tweet: bool = False,
) -> RetrievalDataset:
    """Attach n random unrelated claims per positive pair.

    Negatives are drawn uniformly without replacement from `claim_ids`
    minus the tweet's relevant claims. For a tweet with several positives
    the draws also exclude negatives already taken for that tweet, so pairs
    stay unique and the totals work out to exactly n per positive.

    `relevant` maps tweet id to its full relevant-claim set; when omitted
    it is derived from the positives themselves. `per_tweet=True` switches
    to n negatives per tweet regardless of how many positives it has.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if relevant is None:
        relevant = {}
        for tweet_id, claim_id in positives:
            relevant.setdefault(tweet_id, set()).add(claim_id)
    rng = random.Random(seed)
    positive_counts: Counter[str] = Counter(t for t, _ in positives)
    tweet_order: list[str] = list(dict.fromkeys(t for t, _ in positives))
    pairs = [RetrievalPair(t, c, POSITIVE) for t, c in positives]
    no_claims: frozenset[str] = frozenset()
    # Tweets sharing a relevant set share one pool; draws stay per-tweet.
    pools: dict[frozenset[str], list[str]] = {}
    for tweet_id in tweet_order:
        needed = n if per_tweet else n * positive_counts[tweet_id]
        excluded = frozenset(relevant.get(tweet_id, no_claims))
        unrelated = pools.get(excluded)
        if unrelated is None:
            unrelated = [c for c in claim_ids if c not in excluded]
            pools[excluded] = unrelated
        if len(unrelated) < needed:
            raise InsufficientClaimsError(tweet_id, len(unrelated), needed)
        pairs += [
            RetrievalPair(tweet_id, claim_id, NEGATIVE)
            for claim_id in rng.sample(unrelated, needed)
        ]
    return RetrievalDataset(pairs)


class RankerPort(Protocol):
    """Scores (tweet text, claim text) relevance in [0, 1].

    `fit` may be a no-op for untrained lexical rankers; it returns the
    fitted ranker (possibly self).
    """

    def fit(
        self,
        dataset: RetrievalDataset,
        tweet_texts: Mapping[str, str],
        claim_texts: Mapping[str, str],
    ) -> "RankerPort": ...

    def score(self, tweet_text: str, claim_text: str) -> float: ...


@dataclass(frozen=True)
class RankedClaim:
    claim_id: str
    score: float


@dataclass
class RankedClaims:
    entries: list[RankedClaim]

    def __post_init__(self):
        for prev, cur in zip(self.entries, self.entries[1:]):
            if cur.score > prev.score or (
                cur.score == prev.score and cur.claim_id <= prev.claim_id
            ):
                raise ValueError("entries must descend by score, then ascend by id")

    def __len__(self) -> int:
        return len(self.entries)

    def top(self, k: int) -> list[RankedClaim]:
        return self.entries[:k]

    def claim_ids(self) -> list[str]:
        return [e.claim_id for e in self.entries]


def rank_claims(
    ranker: RankerPort, tweet_text: str, claims: Sequence[Claim]
) -> RankedClaims:
    """Score every claim once and sort: descending score, ascending id.

    Out-of-range scores are clamped to [0, 1] with a warning — remote
    scorers occasionally emit logits; rejecting them outright would make
    the cascade brittle.
    """
    if not claims:
        raise ValueError("claims must be non-empty")
    score_batch = getattr(ranker, "score_batch", None)
    if score_batch is not None:
        raw = score_batch([(tweet_text, c.text) for c in claims])
    else:
        raw = [ranker.score(tweet_text, c.text) for c in claims]
    clamped = 0
    scored: list[RankedClaim] = []
    for claim, value in zip(claims, raw):
        value = float(value)
        if not math.isfinite(value):
            raise ValueError(f"ranker produced non-finite score for {claim.id!r}")
        if value < 0.0 or value > 1.0:
            clamped += 1
            value = min(1.0, max(0.0, value))
        scored.append(RankedClaim(claim.id, value))
    if clamped:
        log.warning("clamped %d out-of-range ranker scores into [0, 1]", clamped)
    scored.sort(key=lambda e: (-e.score, e.claim_id))
    return RankedClaims(scored)


def hit_ratio_at_k(
    rankings: Mapping[str, RankedClaims],
    truth: Mapping[str, set[str]],
    k: int,
) -> float:
    """Fraction of tweets whose top-k ranked claims contain a relevant one."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if not rankings:
        raise ValueError("rankings must be non-empty")
    hits = 0
    for tweet_id, ranking in rankings.items():
        if tweet_id not in truth:
            raise KeyError(f"tweet {tweet_id!r} missing from truth")
        relevant = truth[tweet_id]
        if not relevant:
            raise ValueError(f"tweet {tweet_id!r} has an empty truth set")
        if any(e.claim_id in relevant for e in ranking.top(k)):
            hits += 1
    return hits / len(rankings)


class Bm25Ranker:
    """Untrained lexical ranker: Okapi BM25 of the tweet against each claim.

    Document statistics (df, average length) come from the claim corpus the
    ranker was built on; raw BM25 mass is squashed into [0, 1] via
    score / (score + 1) so the port contract holds.
    """

    def __init__(self, claims: Sequence[Claim], k1: float = 1.2, b: float = 0.75):
        if not claims:
            raise ValueError("claims must be non-empty")
        self.k1 = k1
        self.b = b
        self._df: Counter[str] = Counter()
        lengths = []
        for claim in claims:
            tokens = tokenize(claim.text)
            lengths.append(len(tokens))
            self._df.update(set(tokens))
        self._doc_count = len(claims)
        self._avg_len = sum(lengths) / len(lengths)

    def fit(self, dataset, tweet_texts, claim_texts) -> "Bm25Ranker":
        return self

    def score(self, tweet_text: str, claim_text: str) -> float:
        query = Counter(tokenize(tweet_text))
        doc = Counter(tokenize(claim_text))
        if not doc:
            return 0.0
        doc_len = sum(doc.values())
        total = 0.0
        for term, qtf in query.items():
            tf = doc.get(term)
            if not tf:
                continue
            df = self._df.get(term, 0)
            idf = math.log(1.0 + (self._doc_count - df + 0.5) / (df + 0.5))
            total += qtf * idf * bm25_term_weight(
                tf, doc_len, self._avg_len, self.k1, self.b
            )
        return total / (total + 1.0)


class TfidfCosineRanker:
    """Untrained lexical ranker: cosine of TF-IDF vectors fit on the claims."""

    def __init__(self, claims: Sequence[Claim]):
        if not claims:
            raise ValueError("claims must be non-empty")
        self._model = fit_tfidf([tokenize(c.text) for c in claims])

    def fit(self, dataset, tweet_texts, claim_texts) -> "TfidfCosineRanker":
        return self

    def score(self, tweet_text: str, claim_text: str) -> float:
        sim = cosine(
            tfidf_vector(self._model, tweet_text),
            tfidf_vector(self._model, claim_text),
        )
        # tf-idf weights are non-negative, so sim already sits in [0, 1]
        return max(0.0, min(1.0, sim))


@dataclass(frozen=True)
class RankedResult:
    claim_id: str
    score: float
    rank: int


@dataclass
class PipelineRecord:
    """One cascade decision: the gate verdict plus any retrieved claims."""

    tweet_id: str
    gate: str
    gate_probability: float
    results: list[RankedResult]

    def to_json_dict(self) -> dict:
        return {
            "tweet_id": self.tweet_id,
            "gate": self.gate,
            "gate_probability": self.gate_probability,
            "results": [
                {"claim_id": r.claim_id, "score": r.score, "rank": r.rank}
                for r in self.results
            ],
        }

    @classmethod
    def from_json_dict(cls, row: dict) -> "PipelineRecord":
        return cls(
            tweet_id=str(row["tweet_id"]),
            gate=str(row["gate"]),
            gate_probability=float(row["gate_probability"]),
            results=[
                RankedResult(str(r["claim_id"]), float(r["score"]), int(r["rank"]))
                for r in row.get("results", [])
            ],
        )


def run_pipeline(
    detector: DetectorModel,
    ranker: RankerPort,
    tweet: Tweet,
    claims: Sequence[Claim],
    top_n: int = DEFAULT_TOP_N,
    threshold: float = 0.5,
) -> PipelineRecord:
    """Detection gate first; retrieval only for tweets that pass it.

    Gated-out tweets are discarded without ever invoking the ranker.
    Failures carry the stage name so operators can tell which model broke.
    """
    try:
        decision = detect(detector, tweet.text, threshold=threshold)
    except Exception as exc:
        raise PipelineStageError("detection", exc) from exc
    if decision.label == NO_CLAIM:
        return PipelineRecord(tweet.id, NO_CLAIM, decision.probability, [])
    try:
        ranking = rank_claims(ranker, tweet.text, claims)
    except Exception as exc:
        raise PipelineStageError("retrieval", exc) from exc
    results = [
        RankedResult(e.claim_id, e.score, rank)
        for rank, e in enumerate(ranking.top(top_n), start=1)
    ]
    return PipelineRecord(tweet.id, CLAIM, decision.probability, results)
