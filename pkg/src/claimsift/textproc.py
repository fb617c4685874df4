"""Tokenization and the lexical scorers: TF-IDF with cosine, and Okapi BM25.

All models are immutable after fitting; scoring is read-only. Ranking
tie-breaks are always ascending id so results are reproducible regardless
of corpus ordering.
"""

from __future__ import annotations

import json
import math
import os
import re
from collections import Counter
from dataclasses import dataclass
from typing import Callable, Collection, Iterable, Mapping, Optional, Sequence

from .errors import EmptyCorpusError, ModelFormatError

_URL_RE = re.compile(r"(?:https?://|www\.)\S+", re.IGNORECASE)
_MENTION_RE = re.compile(r"@\w+")
_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)

TFIDF_MAGIC = b"CSTFIDF1"
BM25_MAGIC = b"CSBM25_1"


def tokenize(
    text: str,
    stopwords: Optional[Collection[str]] = None,
    stemmer: Optional[Callable[[str], str]] = None,
) -> list[str]:
    """Lowercase and split on non-alphanumeric boundaries.

    URLs and @-mentions are stripped whole; a leading '#' falls away at the
    boundary split so hashtags keep their word. Numerals are kept. Stopword
    removal and stemming are opt-in and off by default.
    """
    cleaned = _MENTION_RE.sub(" ", _URL_RE.sub(" ", text.lower()))
    tokens = _TOKEN_RE.findall(cleaned)
    if stopwords:
        tokens = [t for t in tokens if t not in stopwords]
    if stemmer:
        tokens = [stemmer(t) for t in tokens]
    return tokens


@dataclass(frozen=True)
class SparseVector:
    """Sorted (index, weight) pairs; zero weights are never stored."""

    indices: tuple[int, ...]
    weights: tuple[float, ...]

    def __post_init__(self):
        if len(self.indices) != len(self.weights):
            raise ValueError("indices and weights differ in length")
        for prev, cur in zip(self.indices, self.indices[1:]):
            if cur <= prev:
                raise ValueError("indices must be strictly increasing")
        for w in self.weights:
            if w == 0.0 or not math.isfinite(w):
                raise ValueError(f"invalid weight {w!r}")

    def __len__(self) -> int:
        return len(self.indices)

    def norm(self) -> float:
        return math.sqrt(sum(w * w for w in self.weights))

    def dot(self, other: "SparseVector") -> float:
        total = 0.0
        i = j = 0
        while i < len(self.indices) and j < len(other.indices):
            a, b = self.indices[i], other.indices[j]
            if a == b:
                total += self.weights[i] * other.weights[j]
                i += 1
                j += 1
            elif a < b:
                i += 1
            else:
                j += 1
        return total


EMPTY_VECTOR = SparseVector((), ())


def cosine(a: SparseVector, b: SparseVector) -> float:
    """Cosine similarity; 0.0 when either vector is empty."""
    if not len(a) or not len(b):
        return 0.0
    denom = a.norm() * b.norm()
    if denom == 0.0:
        return 0.0
    return a.dot(b) / denom


@dataclass(frozen=True)
class TfIdfModel:
    vocabulary: Mapping[str, int]
    idf: tuple[float, ...]
    doc_count: int


def fit_tfidf(docs: Sequence[Sequence[str]]) -> TfIdfModel:
    """Fit smoothed idf weights: idf(t) = ln((1+N)/(1+df(t))) + 1.

    Vocabulary indices are dense [0, V), assigned in sorted term order so
    the model is independent of document ordering.
    """
    if not docs:
        raise EmptyCorpusError("cannot fit TF-IDF on an empty corpus")
    df: Counter[str] = Counter()
    for doc in docs:
        df.update(set(doc))
    vocabulary = {term: i for i, term in enumerate(sorted(df))}
    n = len(docs)
    idf = [0.0] * len(vocabulary)
    for term, i in vocabulary.items():
        idf[i] = math.log((1 + n) / (1 + df[term])) + 1.0
    return TfIdfModel(vocabulary=vocabulary, idf=tuple(idf), doc_count=n)


def tfidf_vector(model: TfIdfModel, text: str | Sequence[str]) -> SparseVector:
    """tf x idf, L2-normalized. Out-of-vocabulary terms are dropped."""
    tokens = tokenize(text) if isinstance(text, str) else list(text)
    counts: Counter[int] = Counter()
    for token in tokens:
        idx = model.vocabulary.get(token)
        if idx is not None:
            counts[idx] += 1
    if not counts:
        return EMPTY_VECTOR
    indices = sorted(counts)
    weights = [counts[i] * model.idf[i] for i in indices]
    norm = math.sqrt(sum(w * w for w in weights))
    return SparseVector(tuple(indices), tuple(w / norm for w in weights))


@dataclass(frozen=True)
class Bm25Index:
    postings: Mapping[str, tuple[tuple[str, int], ...]]
    doc_lengths: Mapping[str, int]
    avg_doc_len: float
    doc_count: int
    k1: float = 1.2
    b: float = 0.75

    def __post_init__(self):
        if self.k1 <= 0:
            raise ValueError(f"k1 must be positive, got {self.k1}")
        if not 0.0 <= self.b <= 1.0:
            raise ValueError(f"b must be in [0, 1], got {self.b}")

    def idf(self, term: str) -> float:
        df = len(self.postings.get(term, ()))
        return math.log(1.0 + (self.doc_count - df + 0.5) / (df + 0.5))


def build_bm25(
    docs: Mapping[str, Sequence[str]], k1: float = 1.2, b: float = 0.75
) -> Bm25Index:
    """Build an inverted index over tokenized docs keyed by id."""
    if not docs:
        raise EmptyCorpusError("cannot index an empty corpus")
    postings: dict[str, list[tuple[str, int]]] = {}
    doc_lengths: dict[str, int] = {}
    for doc_id in sorted(docs):
        tokens = docs[doc_id]
        doc_lengths[doc_id] = len(tokens)
        for term, tf in sorted(Counter(tokens).items()):
            postings.setdefault(term, []).append((doc_id, tf))
    avg = sum(doc_lengths.values()) / len(doc_lengths)
    return Bm25Index(
        postings={t: tuple(p) for t, p in postings.items()},
        doc_lengths=doc_lengths,
        avg_doc_len=avg,
        doc_count=len(doc_lengths),
        k1=k1,
        b=b,
    )


def bm25_term_weight(
    tf: int, doc_len: int, avg_doc_len: float, k1: float, b: float
) -> float:
    return tf * (k1 + 1.0) / (tf + k1 * (1.0 - b + b * doc_len / avg_doc_len))


def bm25_rank(
    index: Bm25Index, query: Sequence[str], k: int
) -> list[tuple[str, float]]:
    """Okapi BM25 ranking: descending score, ties by ascending doc id.

    At most k results; docs that match no query term are omitted.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    scores: dict[str, float] = {}
    for term, qtf in Counter(query).items():
        posting = index.postings.get(term)
        if not posting:
            continue
        idf = index.idf(term)
        for doc_id, tf in posting:
            w = bm25_term_weight(
                tf, index.doc_lengths[doc_id], index.avg_doc_len, index.k1, index.b
            )
            scores[doc_id] = scores.get(doc_id, 0.0) + qtf * idf * w
    ranked = sorted(
        ((doc_id, s) for doc_id, s in scores.items() if s > 0.0),
        key=lambda item: (-item[1], item[0]),
    )
    return ranked[:k]


def _write_magic_json(path: str | os.PathLike, magic: bytes, payload: dict) -> None:
    assert len(magic) == 8
    with open(path, "wb") as fh:
        fh.write(magic)
        fh.write(json.dumps(payload, sort_keys=True).encode("utf-8"))


def _read_magic_json(path: str | os.PathLike, magic: bytes) -> dict:
    with open(path, "rb") as fh:
        header = fh.read(8)
        if header != magic:
            raise ModelFormatError(
                f"{path}: expected header {magic!r}, found {header!r}"
            )
        return json.loads(fh.read().decode("utf-8"))


def save_tfidf(model: TfIdfModel, path: str | os.PathLike) -> None:
    _write_magic_json(
        path,
        TFIDF_MAGIC,
        {
            "vocabulary": dict(model.vocabulary),
            "idf": list(model.idf),
            "doc_count": model.doc_count,
        },
    )


def load_tfidf(path: str | os.PathLike) -> TfIdfModel:
    payload = _read_magic_json(path, TFIDF_MAGIC)
    return TfIdfModel(
        vocabulary=payload["vocabulary"],
        idf=tuple(payload["idf"]),
        doc_count=payload["doc_count"],
    )


def save_bm25(index: Bm25Index, path: str | os.PathLike) -> None:
    _write_magic_json(
        path,
        BM25_MAGIC,
        {
            "postings": {t: [list(p) for p in ps] for t, ps in index.postings.items()},
            "doc_lengths": dict(index.doc_lengths),
            "avg_doc_len": index.avg_doc_len,
            "doc_count": index.doc_count,
            "k1": index.k1,
            "b": index.b,
        },
    )


def load_bm25(path: str | os.PathLike) -> Bm25Index:
    payload = _read_magic_json(path, BM25_MAGIC)
    return Bm25Index(
        postings={
            t: tuple((doc_id, tf) for doc_id, tf in ps)
            for t, ps in payload["postings"].items()
        },
        doc_lengths=payload["doc_lengths"],
        avg_doc_len=payload["avg_doc_len"],
        doc_count=payload["doc_count"],
        k1=payload["k1"],
        b=payload["b"],
    )
