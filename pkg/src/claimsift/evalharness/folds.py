"""Cross-validation fold planning.

Two splitting regimes over the annotated corpus:

* leave-tweet-out (LTO): tweets are partitioned so no tweet appears in
  more than one of train/valid/test within a fold.
* leave-claim-out (LCO): claims are partitioned into groups; each fold
  tests on one group's tweets and never trains on pairs touching that
  group, measuring generalization to unseen claims.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Mapping, Sequence

from ..corpus import AnnotationStore, Label
from ..errors import FoldingError

MODE_LTO = "lto"
MODE_LCO = "lco"

DEFAULT_N_FOLDS = 5
VALID_FRACTION = 0.1


@dataclass(frozen=True)
class Fold:
    index: int
    train_tweets: tuple[str, ...]
    valid_tweets: tuple[str, ...]
    test_tweets: tuple[str, ...]
    # LCO only: the claim group ranked against this fold's test tweets.
    test_claims: tuple[str, ...] = ()

    def __post_init__(self):
        train, valid, test = (
            set(self.train_tweets),
            set(self.valid_tweets),
            set(self.test_tweets),
        )
        if train & valid or train & test or valid & test:
            raise FoldingError(f"fold {self.index}: train/valid/test overlap")


@dataclass(frozen=True)
class FoldPlan:
    mode: str
    seed: int
    folds: tuple[Fold, ...]
    # Relevant pairs whose claim group is not the fold their tweet tests
    # in; they are removed from retrieval data rather than reassigned, so
    # train and test claims stay disjoint. Always 0 for LTO.
    dropped_pairs: int = 0

    def __post_init__(self):
        if self.mode not in (MODE_LTO, MODE_LCO):
            raise FoldingError(f"unknown fold mode {self.mode!r}")
        if not self.folds:
            raise FoldingError("a fold plan needs at least one fold")
        seen: set[str] = set()
        for fold in self.folds:
            overlap = seen.intersection(fold.test_tweets)
            if overlap:
                raise FoldingError(f"tweet ids test in two folds: {sorted(overlap)[:3]}")
            seen.update(fold.test_tweets)

    @property
    def n_folds(self) -> int:
        return len(self.folds)

    def all_test_tweets(self) -> set[str]:
        out: set[str] = set()
        for fold in self.folds:
            out.update(fold.test_tweets)
        return out


def _near_equal_partition(items: Sequence[str], n: int) -> list[list[str]]:
    """Split items into n contiguous chunks whose sizes differ by at most 1.

    The first len(items) % n chunks take the extra element, so 83 items in
    5 chunks come out as 17/17/17/16/16.
    """
    base, extra = divmod(len(items), n)
    chunks: list[list[str]] = []
    start = 0
    for i in range(n):
        size = base + (1 if i < extra else 0)
        chunks.append(list(items[start : start + size]))
        start += size
    return chunks


def _split_train_valid(
    rest: list[str], rng: random.Random
) -> tuple[list[str], list[str]]:
    if len(rest) < 2:
        return list(rest), []
    shuffled = list(rest)
    rng.shuffle(shuffled)
    n_valid = max(1, round(VALID_FRACTION * len(shuffled)))
    n_valid = min(n_valid, len(shuffled) - 1)
    return shuffled[n_valid:], shuffled[:n_valid]


def make_lto_folds(
    tweet_ids: Sequence[str], n_folds: int = DEFAULT_N_FOLDS, seed: int = 0
) -> FoldPlan:
    """Shuffle tweets by seed into n near-equal test sets; per fold, the
    remaining tweets are reshuffled (seed + fold index) and split roughly
    90/10 into train/valid.
    """
    ids = list(tweet_ids)
    if len(set(ids)) != len(ids):
        raise FoldingError("tweet ids must be unique")
    if n_folds < 2:
        raise FoldingError(f"n_folds must be >= 2, got {n_folds}")
    if len(ids) < n_folds:
        raise FoldingError(f"{len(ids)} tweets cannot fill {n_folds} folds")
    rng = random.Random(seed)
    rng.shuffle(ids)
    test_sets = _near_equal_partition(ids, n_folds)
    folds = []
    for f, test in enumerate(test_sets):
        test_set = set(test)
        rest = [t for t in ids if t not in test_set]
        train, valid = _split_train_valid(rest, random.Random(seed + f))
        folds.append(
            Fold(f, tuple(sorted(train)), tuple(sorted(valid)), tuple(sorted(test)))
        )
    return FoldPlan(MODE_LTO, seed, tuple(folds))


def _assign_positive_fold(
    relevant_claims: set[str], claim_fold: Mapping[str, int]
) -> int:
    """Fold of the plurality of the tweet's relevant claims; ties resolve
    to whichever tied fold contains the lowest relevant claim id.
    """
    votes: dict[int, int] = {}
    for claim_id in relevant_claims:
        f = claim_fold[claim_id]
        votes[f] = votes.get(f, 0) + 1
    best = max(votes.values())
    tied = {f for f, v in votes.items() if v == best}
    if len(tied) == 1:
        return tied.pop()
    for claim_id in sorted(relevant_claims):
        if claim_fold[claim_id] in tied:
            return claim_fold[claim_id]
    raise AssertionError("unreachable: some relevant claim sits in a tied fold")


def make_lco_folds(
    store: AnnotationStore,
    claim_ids: Sequence[str],
    n_folds: int = DEFAULT_N_FOLDS,
    seed: int = 0,
) -> FoldPlan:
    """Partition claims into n shuffled near-equal groups, then derive
    tweet folds from them.

    Tweets with at least one relevant claim test in the fold holding the
    plurality of their relevant claims. Labeled no-claim tweets are dealt
    round-robin across folds in shuffled order. Tweets whose pairs are all
    unlabeled stay out of the plan entirely.

    Fold f's train/valid pool additionally excludes any positive tweet
    with a relevant claim in group f, so detection training never sees
    text tied to a held-out claim.
    """
    claims = list(claim_ids)
    if len(set(claims)) != len(claims):
        raise FoldingError("claim ids must be unique")
    if n_folds < 2:
        raise FoldingError(f"n_folds must be >= 2, got {n_folds}")
    if len(claims) < n_folds:
        raise FoldingError(f"{len(claims)} claims cannot fill {n_folds} folds")

    rng = random.Random(seed)
    rng.shuffle(claims)
    groups = _near_equal_partition(claims, n_folds)
    claim_fold = {c: f for f, group in enumerate(groups) for c in group}

    relevant = store.relevant_map()
    labeled_negative: list[str] = []
    for tweet_id in store.tweets_in_store():
        if tweet_id in relevant:
            continue
        labels = {p.label for p in store.pairs_for_tweet(tweet_id)}
        if Label.NOT_RELEVANT in labels:
            labeled_negative.append(tweet_id)

    assigned: dict[int, list[str]] = {f: [] for f in range(n_folds)}
    dropped = 0
    for tweet_id in sorted(relevant):
        fold_index = _assign_positive_fold(relevant[tweet_id], claim_fold)
        assigned[fold_index].append(tweet_id)
        dropped += sum(
            1 for c in relevant[tweet_id] if claim_fold[c] != fold_index
        )
    rng.shuffle(labeled_negative)
    for i, tweet_id in enumerate(labeled_negative):
        assigned[i % n_folds].append(tweet_id)

    all_tweets = sorted(t for members in assigned.values() for t in members)
    folds = []
    for f in range(n_folds):
        test_set = set(assigned[f])
        group_f = set(groups[f])
        rest = [
            t
            for t in all_tweets
            if t not in test_set and not (relevant.get(t, set()) & group_f)
        ]
        train, valid = _split_train_valid(rest, random.Random(seed + f))
        folds.append(
            Fold(
                f,
                tuple(sorted(train)),
                tuple(sorted(valid)),
                tuple(sorted(test_set)),
                tuple(sorted(group_f)),
            )
        )
    return FoldPlan(MODE_LCO, seed, tuple(folds), dropped_pairs=dropped)
