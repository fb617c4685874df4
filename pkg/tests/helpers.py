"""Shared builders for synthetic corpora.

Topics use disjoint vocabularies (topic i only ever emits topic{i}-prefixed
tokens) so lexical models can separate them perfectly, which is exactly
what the sanity suites need: failures then point at plumbing, not at
model quality.
"""

from __future__ import annotations

import datetime as dt
import json
import random

from claimsift.corpus import (
    AnnotationStore,
    Claim,
    ClaimSet,
    Tweet,
    TweetKind,
    TweetSet,
    Verdict,
)

UTC = dt.timezone.utc
WINDOW_STAMP = dt.datetime(2022, 3, 1, 12, 0, tzinfo=UTC)
TOPIC_WORDS = 8


def topic_vocab(i: int) -> list[str]:
    return [f"topic{i}word{j}" for j in range(TOPIC_WORDS)]


def noise_vocab(n: int = 40) -> list[str]:
    return [f"noise{j}" for j in range(n)]


def make_claim(i: int) -> Claim:
    return Claim(
        id=f"c{i:04d}",
        text=" ".join(topic_vocab(i)[:5]),
        verdict=Verdict.FALSE,
        verified_date=dt.date(2022, 3, 1),
    )


def make_tweet(tweet_id: str, words: list[str]) -> Tweet:
    return Tweet(
        id=tweet_id,
        text=" ".join(words),
        created_at=WINDOW_STAMP,
        lang="en",
        kind=TweetKind.ORIGINAL,
    )


def separable_corpus(
    n_claims: int = 20,
    tweets_per_claim: int = 10,
    n_noise: int = 200,
    seed: int = 7,
):
    """Claims, tweets, and the true tweet->claims map, by topic."""
    rng = random.Random(seed)
    claims = [make_claim(i) for i in range(n_claims)]
    tweets: list[Tweet] = []
    relevant: dict[str, set[str]] = {}
    serial = 0
    for i in range(n_claims):
        vocab = topic_vocab(i)
        for _ in range(tweets_per_claim):
            # the first three vocab words are also in the claim text, so
            # every positive tweet shares tokens with its claim
            words = vocab[:3] + rng.sample(vocab, 3)
            tweet_id = f"t{serial:05d}"
            serial += 1
            tweets.append(make_tweet(tweet_id, words))
            relevant[tweet_id] = {claims[i].id}
    noise = noise_vocab()
    for _ in range(n_noise):
        tweet_id = f"t{serial:05d}"
        serial += 1
        tweets.append(make_tweet(tweet_id, rng.sample(noise, 6)))
    return claims, tweets, relevant


def labeled_store(
    n_claims: int = 20,
    tweets_per_claim: int = 10,
    n_noise: int = 200,
    seed: int = 7,
) -> AnnotationStore:
    """A fully labeled store over the separable corpus.

    Positive tweets carry a relevant label for their topic claim plus one
    not-relevant label against a different claim; noise tweets carry one
    not-relevant label, so every tweet has a terminal annotation.
    """
    claims, tweets, relevant = separable_corpus(
        n_claims, tweets_per_claim, n_noise, seed
    )
    store = AnnotationStore(ClaimSet(claims), TweetSet(tweets))
    rng = random.Random(seed + 1)
    claim_ids = [c.id for c in claims]
    for tweet in tweets:
        wanted = relevant.get(tweet.id)
        if wanted:
            for claim_id in sorted(wanted):
                store.record(tweet.id, claim_id, "relevant", "builder")
            others = [c for c in claim_ids if c not in wanted]
            store.record(tweet.id, rng.choice(others), "not_relevant", "builder")
        else:
            store.record(tweet.id, rng.choice(claim_ids), "not_relevant", "builder")
    return store


def write_corpus_files(tmp_path, claims, tweets):
    """Serialize corpora in the on-disk formats the loaders expect."""
    claims_path = tmp_path / "claims.json"
    with open(claims_path, "w", encoding="utf-8") as fh:
        json.dump(
            [
                {
                    "id": c.id,
                    "text": c.text,
                    "verdict": c.verdict.value,
                    "verified_date": c.verified_date.isoformat(),
                    "source_url": c.source_url,
                }
                for c in claims
            ],
            fh,
        )
    tweets_path = tmp_path / "tweets.jsonl"
    with open(tweets_path, "w", encoding="utf-8") as fh:
        for t in tweets:
            fh.write(
                json.dumps(
                    {
                        "id": t.id,
                        "text": t.text,
                        "created_at": t.created_at.isoformat(),
                        "lang": t.lang,
                        "kind": t.kind.value,
                    }
                )
                + "\n"
            )
    return claims_path, tweets_path


def export_store(tmp_path, store: AnnotationStore):
    path = tmp_path / "annotations.jsonl"
    store.export_jsonl(path)
    return path


# Sync-over-ASGI bridge shared with the shipped conformance suite.
from claimsift.gateway.mock import SyncASGITransport  # noqa: E402,F401
