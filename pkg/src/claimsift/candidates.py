"""Annotation-candidate generation.

Embeds claims and tweets through a pluggable encoder, ranks tweets per
claim by cosine similarity, keeps the top-K, and emits the deduplicated
pair pool that feeds the labeling workflow. At this corpus scale the
similarity computation is a single dense matrix product; no approximate
nearest-neighbor structure is warranted.
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass
from typing import Iterable, Protocol, Sequence

import numpy as np

from .corpus import ClaimSet, TweetSet
from .errors import DimensionMismatchError, EncoderError, ParseError
from .textproc import tokenize

DEFAULT_TOP_K = 100


class EncoderPort(Protocol):
    """Maps a batch of texts to fixed-dimension dense vectors."""

    dim: int

    def encode(self, texts: Sequence[str]) -> np.ndarray: ...


class HashingEncoder:
    """Deterministic local encoder: tokens feature-hashed into `dim` buckets.

    Same text always maps to the same vector, across processes and runs
    (bucket and sign come from blake2b digests, not the salted builtin
    hash). Vectors are L2-normalized; an all-empty text stays a zero
    vector. Suitable for tests and offline runs only — semantic quality is
    whatever lexical overlap gives.
    """

    def __init__(self, dim: int = 256):
        if dim < 1:
            raise ValueError(f"dim must be >= 1, got {dim}")
        self.dim = dim

    def _token_slot(self, token: str) -> tuple[int, float]:
        digest = hashlib.blake2b(token.encode("utf-8"), digest_size=8).digest()
        value = int.from_bytes(digest, "big")
        return value % self.dim, 1.0 if (value >> 32) & 1 else -1.0

    def encode(self, texts: Sequence[str]) -> np.ndarray:
        out = np.zeros((len(texts), self.dim), dtype=np.float64)
        for row, text in enumerate(texts):
            for token in tokenize(text):
                slot, sign = self._token_slot(token)
                out[row, slot] += sign
            norm = np.linalg.norm(out[row])
            if norm > 0.0:
                out[row] /= norm
        return out


def encode_all(
    encoder: EncoderPort, texts: Sequence[str], batch_size: int = 256
) -> np.ndarray:
    """Encode texts in batches; row i corresponds to text i.

    Encoder failures are re-raised annotated with the failing batch index.
    """
    if batch_size < 1:
        raise ValueError(f"batch_size must be >= 1, got {batch_size}")
    chunks: list[np.ndarray] = []
    dim: int | None = None
    for batch_index, start in enumerate(range(0, len(texts), batch_size)):
        batch = texts[start : start + batch_size]
        try:
            vectors = np.asarray(encoder.encode(batch), dtype=np.float64)
        except Exception as exc:
            raise EncoderError(batch_index, exc) from exc
        if vectors.ndim != 2 or vectors.shape[0] != len(batch):
            raise EncoderError(
                batch_index,
                f"encoder returned shape {vectors.shape} for {len(batch)} texts",
            )
        if dim is None:
            dim = vectors.shape[1]
        elif vectors.shape[1] != dim:
            raise DimensionMismatchError(
                f"batch {batch_index} has dimension {vectors.shape[1]}, expected {dim}"
            )
        chunks.append(vectors)
    if not chunks:
        return np.zeros((0, getattr(encoder, "dim", 0)), dtype=np.float64)
    return np.vstack(chunks)


def _cosine_rows(query: np.ndarray, matrix: np.ndarray) -> np.ndarray:
    qnorm = np.linalg.norm(query)
    norms = np.linalg.norm(matrix, axis=1)
    dots = matrix @ query
    with np.errstate(invalid="ignore", divide="ignore"):
        sims = np.where(norms * qnorm > 0.0, dots / (norms * qnorm), 0.0)
    return sims


def top_k_tweets(
    claim_vec: np.ndarray,
    tweet_vecs: np.ndarray,
    tweet_ids: Sequence[str],
    k: int,
) -> list[tuple[str, float]]:
    """Top-k tweets by cosine similarity to a claim vector.

    Descending similarity, ties broken by ascending tweet id; returns
    min(k, number of tweets) entries.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    claim_vec = np.asarray(claim_vec, dtype=np.float64)
    if tweet_vecs.shape[0] != len(tweet_ids):
        raise ValueError("tweet_vecs rows and tweet_ids differ in length")
    if tweet_vecs.shape[0] and tweet_vecs.shape[1] != claim_vec.shape[0]:
        raise DimensionMismatchError(
            f"claim dim {claim_vec.shape[0]} vs tweet dim {tweet_vecs.shape[1]}"
        )
    sims = _cosine_rows(claim_vec, tweet_vecs)
    order = sorted(range(len(tweet_ids)), key=lambda i: (-sims[i], tweet_ids[i]))
    return [(tweet_ids[i], float(sims[i])) for i in order[:k]]


@dataclass(frozen=True)
class PoolEntry:
    claim_id: str
    tweet_id: str
    rank: int  # 1-based within the claim's list
    similarity: float


class PairPool:
    """The deduplicated candidate pairs: per claim, at most K ranked tweets."""

    def __init__(self, entries: Iterable[PoolEntry], k: int):
        self.k = k
        self.entries = list(entries)
        seen: set[tuple[str, str]] = set()
        per_claim: dict[str, int] = {}
        for e in self.entries:
            key = (e.tweet_id, e.claim_id)
            if key in seen:
                raise ValueError(f"duplicate pair {key} in pool")
            seen.add(key)
            per_claim[e.claim_id] = per_claim.get(e.claim_id, 0) + 1
        for claim_id, count in per_claim.items():
            if count > k:
                raise ValueError(f"claim {claim_id!r} has {count} entries, k={k}")

    def __len__(self) -> int:
        return len(self.entries)

    def unique_tweets(self) -> set[str]:
        return {e.tweet_id for e in self.entries}

    def per_claim(self, claim_id: str) -> list[PoolEntry]:
        return sorted(
            (e for e in self.entries if e.claim_id == claim_id),
            key=lambda e: e.rank,
        )

    def export_jsonl(self, path: str | os.PathLike) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for e in self.entries:
                fh.write(
                    json.dumps(
                        {
                            "claim_id": e.claim_id,
                            "tweet_id": e.tweet_id,
                            "rank": e.rank,
                            "similarity": e.similarity,
                        },
                        sort_keys=True,
                    )
                    + "\n"
                )

    @classmethod
    def import_jsonl(cls, path: str | os.PathLike, k: int = DEFAULT_TOP_K) -> "PairPool":
        entries = []
        with open(path, "r", encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                if not line.strip():
                    continue
                try:
                    row = json.loads(line)
                    entries.append(
                        PoolEntry(
                            claim_id=str(row["claim_id"]),
                            tweet_id=str(row["tweet_id"]),
                            rank=int(row["rank"]),
                            similarity=float(row["similarity"]),
                        )
                    )
                except (KeyError, ValueError, TypeError) as exc:
                    raise ParseError(path, lineno, f"bad pool row: {exc}") from exc
        return cls(entries, k=k)


def build_pair_pool(
    claims: ClaimSet,
    tweets: TweetSet,
    encoder: EncoderPort,
    k: int = DEFAULT_TOP_K,
) -> PairPool:
    """Union over claims of their top-k most similar tweets.

    Entries are assembled in ascending claim-id order so the pool is
    deterministic whenever the encoder is. A pair can be reached only once
    (each claim contributes its own list), so pairs are unique by
    construction; distinct tweets can be fewer than pairs because one tweet
    may rank under several claims.
    """
    if not len(claims) or not len(tweets):
        raise ValueError("claims and tweets must both be non-empty")
    claim_list = sorted(claims, key=lambda c: c.id)
    tweet_ids = tweets.ids()
    claim_matrix = encode_all(encoder, [c.text for c in claim_list])
    tweet_matrix = encode_all(encoder, [tweets[tid].text for tid in tweet_ids])
    entries: list[PoolEntry] = []
    for row, claim in enumerate(claim_list):
        ranked = top_k_tweets(claim_matrix[row], tweet_matrix, tweet_ids, k)
        for rank, (tweet_id, sim) in enumerate(ranked, start=1):
            entries.append(PoolEntry(claim.id, tweet_id, rank, sim))
    return PairPool(entries, k=k)
