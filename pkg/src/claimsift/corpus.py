"""Data model, ingestion filters, and the persistent annotation store.

Claims live in a single JSON array file (the corpus is small); tweets and
annotation pairs are line-delimited JSON so they can stream. Retweets are
rejected at ingest regardless of the filter, since their text duplicates
the original post.
"""

from __future__ import annotations

import datetime as dt
import json
import logging
import os
import threading
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Iterable, Iterator, Optional

from .errors import (
    DuplicateIdError,
    LabelTransitionError,
    ParseError,
    UnknownIdError,
)

log = logging.getLogger(__name__)

UTC = dt.timezone.utc


class Verdict(str, Enum):
    FALSE = "false"
    UNSUBSTANTIATED = "unsubstantiated"


class TweetKind(str, Enum):
    ORIGINAL = "original"
    REPLY = "reply"
    QUOTE = "quote"


class Label(str, Enum):
    RELEVANT = "relevant"
    NOT_RELEVANT = "not_relevant"
    UNLABELED = "unlabeled"


TERMINAL_LABELS = frozenset({Label.RELEVANT, Label.NOT_RELEVANT})


@dataclass(frozen=True)
class Claim:
    id: str
    text: str
    verdict: Verdict
    verified_date: dt.date
    source_url: Optional[str] = None

    def __post_init__(self):
        if not self.text.strip():
            raise ValueError(f"claim {self.id!r} has empty text")


@dataclass(frozen=True)
class Tweet:
    id: str
    text: str
    created_at: dt.datetime
    lang: str
    kind: TweetKind

    def __post_init__(self):
        if not self.text.strip():
            raise ValueError(f"tweet {self.id!r} has empty text")


@dataclass
class AnnotationPair:
    tweet_id: str
    claim_id: str
    label: Label = Label.UNLABELED
    annotator: str = ""
    labeled_at: Optional[dt.datetime] = None

    @property
    def key(self) -> tuple[str, str]:
        return (self.tweet_id, self.claim_id)


@dataclass(frozen=True)
class IngestFilter:
    """Predicates applied to every tweet row at load time.

    The date window is inclusive on both ends and compared on UTC calendar
    dates. Language matching uses the record's declared tag as-is.
    """

    date_window: tuple[dt.date, dt.date]
    languages: frozenset[str]
    kinds: frozenset[TweetKind]

    def __post_init__(self):
        start, end = self.date_window
        if start > end:
            raise ValueError(f"date window start {start} after end {end}")
        if not self.languages:
            raise ValueError("languages set is empty")
        if not self.kinds:
            raise ValueError("kinds set is empty")

    def admits(self, tweet: Tweet) -> bool:
        start, end = self.date_window
        day = tweet.created_at.astimezone(UTC).date()
        return (
            start <= day <= end
            and tweet.lang in self.languages
            and tweet.kind in self.kinds
        )


def default_ingest_filter() -> IngestFilter:
    """English originals/replies/quotes from the collection window."""
    return IngestFilter(
        date_window=(dt.date(2022, 2, 22), dt.date(2022, 3, 8)),
        languages=frozenset({"en"}),
        kinds=frozenset(TweetKind),
    )


class ClaimSet:
    """Immutable, order-preserving collection of claims keyed by id."""

    def __init__(self, claims: Iterable[Claim]):
        self._by_id: dict[str, Claim] = {}
        for claim in claims:
            if claim.id in self._by_id:
                raise DuplicateIdError("claim", claim.id)
            self._by_id[claim.id] = claim

    def __len__(self) -> int:
        return len(self._by_id)

    def __iter__(self) -> Iterator[Claim]:
        return iter(self._by_id.values())

    def __contains__(self, claim_id: str) -> bool:
        return claim_id in self._by_id

    def __getitem__(self, claim_id: str) -> Claim:
        try:
            return self._by_id[claim_id]
        except KeyError:
            raise UnknownIdError("claim", claim_id) from None

    def ids(self) -> list[str]:
        return list(self._by_id)


class TweetSet:
    """Immutable, order-preserving collection of tweets keyed by id."""

    def __init__(self, tweets: Iterable[Tweet]):
        self._by_id: dict[str, Tweet] = {}
        for tweet in tweets:
            if tweet.id in self._by_id:
                raise DuplicateIdError("tweet", tweet.id)
            self._by_id[tweet.id] = tweet

    def __len__(self) -> int:
        return len(self._by_id)

    def __iter__(self) -> Iterator[Tweet]:
        return iter(self._by_id.values())

    def __contains__(self, tweet_id: str) -> bool:
        return tweet_id in self._by_id

    def __getitem__(self, tweet_id: str) -> Tweet:
        try:
            return self._by_id[tweet_id]
        except KeyError:
            raise UnknownIdError("tweet", tweet_id) from None

    def ids(self) -> list[str]:
        return list(self._by_id)


def _parse_rfc3339(value: str) -> dt.datetime:
    # Python 3.10's fromisoformat does not accept a bare 'Z' suffix.
    ts = dt.datetime.fromisoformat(value.replace("Z", "+00:00"))
    if ts.tzinfo is None:
        ts = ts.replace(tzinfo=UTC)
    return ts


def _parse_date(value: str) -> dt.date:
    return dt.date.fromisoformat(value)


def load_claims(path: str | os.PathLike) -> ClaimSet:
    """Load the claims file: a JSON array of claim objects."""
    with open(path, "r", encoding="utf-8") as fh:
        try:
            rows = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ParseError(path, exc.lineno, f"invalid JSON: {exc.msg}") from exc
    if not isinstance(rows, list):
        raise ParseError(path, 1, "claims file must contain a JSON array")
    claims = []
    for i, row in enumerate(rows):
        try:
            claims.append(
                Claim(
                    id=str(row["id"]),
                    text=str(row["text"]),
                    verdict=Verdict(row["verdict"]),
                    verified_date=_parse_date(row["verified_date"]),
                    source_url=row.get("source_url"),
                )
            )
        except (KeyError, ValueError, TypeError) as exc:
            raise ParseError(path, i + 1, f"bad claim entry: {exc}") from exc
    return ClaimSet(claims)


def load_tweets(path: str | os.PathLike, ingest_filter: IngestFilter) -> TweetSet:
    """Load the line-delimited tweets file, applying the ingest filter.

    Rows marked as retweets are always dropped. Unknown fields are ignored.
    Duplicate ids are a hard error: silent dedup would hide upstream
    corruption. An empty result is not an error.
    """
    kept: list[Tweet] = []
    seen: set[str] = set()
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                row = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(path, lineno, f"invalid JSON: {exc.msg}") from exc
            try:
                kind_raw = str(row["kind"])
                if kind_raw == "retweet":
                    continue
                tweet = Tweet(
                    id=str(row["id"]),
                    text=str(row["text"]),
                    created_at=_parse_rfc3339(row["created_at"]),
                    lang=str(row["lang"]),
                    kind=TweetKind(kind_raw),
                )
            except (KeyError, ValueError, TypeError) as exc:
                raise ParseError(path, lineno, f"bad tweet row: {exc}") from exc
            if tweet.id in seen:
                raise DuplicateIdError("tweet", tweet.id)
            seen.add(tweet.id)
            if ingest_filter.admits(tweet):
                kept.append(tweet)
    return TweetSet(kept)


@dataclass
class Stats:
    tweets_with_claim: int
    tweets_without_claim: int
    pairs_relevant: int
    claims_per_tweet: dict[int, int]


class AnnotationStore:
    """Ground-truth store of (tweet, claim) pairs and their labels.

    Single-writer / multi-reader: mutations are serialized through an
    internal lock; the claim/tweet sets are immutable after load.
    """

    def __init__(self, claims: ClaimSet, tweets: TweetSet):
        self.claims = claims
        self.tweets = tweets
        self._pairs: dict[tuple[str, str], AnnotationPair] = {}
        self._lock = threading.Lock()

    def __len__(self) -> int:
        return len(self._pairs)

    def __contains__(self, key: tuple[str, str]) -> bool:
        return key in self._pairs

    def get(self, tweet_id: str, claim_id: str) -> Optional[AnnotationPair]:
        return self._pairs.get((tweet_id, claim_id))

    def pairs(self) -> list[AnnotationPair]:
        return list(self._pairs.values())

    def seed_pair(self, tweet_id: str, claim_id: str) -> AnnotationPair:
        """Register a candidate pair as unlabeled; no-op if already present."""
        self._check_ids(tweet_id, claim_id)
        with self._lock:
            key = (tweet_id, claim_id)
            if key not in self._pairs:
                self._pairs[key] = AnnotationPair(tweet_id, claim_id)
            return self._pairs[key]

    def record(
        self,
        tweet_id: str,
        claim_id: str,
        label: Label | str,
        annotator: str,
        now: Optional[dt.datetime] = None,
    ) -> AnnotationPair:
        """Upsert a label for a pair.

        Transitions allowed: unlabeled -> terminal, terminal -> terminal.
        Recording the identical terminal label again is a no-op.
        """
        label = Label(label)
        if label not in TERMINAL_LABELS:
            raise LabelTransitionError(
                f"cannot record non-terminal label {label.value!r}"
            )
        self._check_ids(tweet_id, claim_id)
        with self._lock:
            key = (tweet_id, claim_id)
            pair = self._pairs.get(key)
            if pair is not None and pair.label == label:
                return pair
            stamp = now if now is not None else dt.datetime.now(UTC)
            pair = AnnotationPair(tweet_id, claim_id, label, annotator, stamp)
            self._pairs[key] = pair
            return pair

    def _check_ids(self, tweet_id: str, claim_id: str) -> None:
        if tweet_id not in self.tweets:
            raise UnknownIdError("tweet", tweet_id)
        if claim_id not in self.claims:
            raise UnknownIdError("claim", claim_id)

    def relevant_claims(self, tweet_id: str) -> set[str]:
        return {
            p.claim_id
            for p in self._pairs.values()
            if p.tweet_id == tweet_id and p.label == Label.RELEVANT
        }

    def relevant_map(self) -> dict[str, set[str]]:
        """Tweet id -> its relevant claim ids, for tweets with at least one."""
        out: dict[str, set[str]] = {}
        for pair in self._pairs.values():
            if pair.label == Label.RELEVANT:
                out.setdefault(pair.tweet_id, set()).add(pair.claim_id)
        return out

    def pairs_for_tweet(self, tweet_id: str) -> list[AnnotationPair]:
        return [p for p in self._pairs.values() if p.tweet_id == tweet_id]

    def tweets_in_store(self) -> list[str]:
        out: dict[str, None] = {}
        for pair in self._pairs.values():
            out.setdefault(pair.tweet_id, None)
        return list(out)

    def stats(self) -> Stats:
        relevant_count: dict[str, int] = {}
        pairs_relevant = 0
        for pair in self._pairs.values():
            relevant_count.setdefault(pair.tweet_id, 0)
            if pair.label == Label.RELEVANT:
                relevant_count[pair.tweet_id] += 1
                pairs_relevant += 1
        histogram: dict[int, int] = {}
        with_claim = 0
        for count in relevant_count.values():
            histogram[count] = histogram.get(count, 0) + 1
            if count > 0:
                with_claim += 1
        return Stats(
            tweets_with_claim=with_claim,
            tweets_without_claim=len(relevant_count) - with_claim,
            pairs_relevant=pairs_relevant,
            claims_per_tweet=histogram,
        )

    def export_jsonl(self, path: str | os.PathLike) -> None:
        """Write all pairs, sorted by key, one JSON object per line.

        The write is atomic (temp file + rename) so a reader never sees a
        half-written store.
        """
        tmp = f"{path}.tmp"
        with open(tmp, "w", encoding="utf-8") as fh:
            for key in sorted(self._pairs):
                pair = self._pairs[key]
                fh.write(
                    json.dumps(
                        {
                            "tweet_id": pair.tweet_id,
                            "claim_id": pair.claim_id,
                            "label": pair.label.value,
                            "annotator": pair.annotator,
                            "labeled_at": (
                                pair.labeled_at.isoformat()
                                if pair.labeled_at is not None
                                else None
                            ),
                        },
                        ensure_ascii=False,
                    )
                    + "\n"
                )
        os.replace(tmp, path)

    def import_jsonl(self, path: str | os.PathLike) -> int:
        """Load pairs from an annotations file into this store.

        Returns the number of pairs read. Existing entries are overwritten;
        ids must exist in the loaded claim/tweet sets.
        """
        count = 0
        with open(path, "r", encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                if not line.strip():
                    continue
                try:
                    row = json.loads(line)
                    pair = AnnotationPair(
                        tweet_id=str(row["tweet_id"]),
                        claim_id=str(row["claim_id"]),
                        label=Label(row["label"]),
                        annotator=str(row.get("annotator") or ""),
                        labeled_at=(
                            _parse_rfc3339(row["labeled_at"])
                            if row.get("labeled_at")
                            else None
                        ),
                    )
                except (KeyError, ValueError, TypeError) as exc:
                    raise ParseError(path, lineno, f"bad annotation row: {exc}") from exc
                self._check_ids(pair.tweet_id, pair.claim_id)
                with self._lock:
                    self._pairs[pair.key] = pair
                count += 1
        return count


def record_annotation(
    store: AnnotationStore,
    tweet_id: str,
    claim_id: str,
    label: Label | str,
    annotator: str,
) -> AnnotationStore:
    store.record(tweet_id, claim_id, label, annotator)
    return store


def corpus_stats(store: AnnotationStore) -> Stats:
    return store.stats()
