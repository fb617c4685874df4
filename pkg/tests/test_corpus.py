"""Loader, filter, and annotation store behavior."""

import datetime as dt
import json

import pytest

import helpers
from claimsift.corpus import (
    AnnotationStore,
    ClaimSet,
    IngestFilter,
    Label,
    Tweet,
    TweetKind,
    TweetSet,
    default_ingest_filter,
    load_claims,
    load_tweets,
)
from claimsift.errors import (
    DuplicateIdError,
    LabelTransitionError,
    ParseError,
    UnknownIdError,
)

UTC = dt.timezone.utc


def stamp(day: int, hour: int = 12) -> dt.datetime:
    return dt.datetime(2022, 3, day, hour, 0, tzinfo=UTC)


def tweet_row(**overrides) -> dict:
    row = {
        "id": "t1",
        "text": "some words here",
        "created_at": "2022-03-01T12:00:00+00:00",
        "lang": "en",
        "kind": "original",
    }
    row.update(overrides)
    return row


def write_jsonl(path, rows):
    with open(path, "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row) + "\n")


class TestLoadClaims:
    def test_round_trip(self, tmp_path):
        claims = [helpers.make_claim(i) for i in range(5)]
        claims_path, _ = helpers.write_corpus_files(tmp_path, claims, [])
        loaded = load_claims(claims_path)
        assert len(loaded) == 5
        assert loaded.ids() == [c.id for c in claims]
        assert loaded["c0002"].text == claims[2].text
        assert loaded["c0002"].verdict == claims[2].verdict

    def test_rejects_non_array(self, tmp_path):
        path = tmp_path / "claims.json"
        path.write_text('{"id": "c1"}')
        with pytest.raises(ParseError) as exc:
            load_claims(path)
        assert "array" in str(exc.value)

    def test_invalid_json_is_parse_error(self, tmp_path):
        path = tmp_path / "claims.json"
        path.write_text("[{]")
        with pytest.raises(ParseError):
            load_claims(path)

    def test_bad_entry_names_position(self, tmp_path):
        rows = [
            {
                "id": "c1",
                "text": "ok",
                "verdict": "false",
                "verified_date": "2022-03-01",
            },
            {"id": "c2", "text": "ok", "verdict": "maybe", "verified_date": "2022-03-01"},
        ]
        path = tmp_path / "claims.json"
        path.write_text(json.dumps(rows))
        with pytest.raises(ParseError) as exc:
            load_claims(path)
        assert exc.value.line == 2

    def test_duplicate_claim_id(self, tmp_path):
        row = {
            "id": "c1",
            "text": "ok",
            "verdict": "false",
            "verified_date": "2022-03-01",
        }
        path = tmp_path / "claims.json"
        path.write_text(json.dumps([row, row]))
        with pytest.raises(DuplicateIdError):
            load_claims(path)


class TestLoadTweets:
    def test_retweets_always_dropped(self, tmp_path):
        path = tmp_path / "tweets.jsonl"
        write_jsonl(
            path,
            [
                tweet_row(id="t1"),
                tweet_row(id="t2", kind="retweet"),
                tweet_row(id="t3", kind="reply"),
            ],
        )
        loaded = load_tweets(path, default_ingest_filter())
        assert loaded.ids() == ["t1", "t3"]

    def test_duplicate_id_is_hard_error(self, tmp_path):
        path = tmp_path / "tweets.jsonl"
        write_jsonl(path, [tweet_row(id="t1"), tweet_row(id="t1")])
        with pytest.raises(DuplicateIdError):
            load_tweets(path, default_ingest_filter())

    def test_duplicate_detected_even_when_filtered_out(self, tmp_path):
        path = tmp_path / "tweets.jsonl"
        write_jsonl(
            path,
            [tweet_row(id="t1", lang="fr"), tweet_row(id="t1", lang="fr")],
        )
        with pytest.raises(DuplicateIdError):
            load_tweets(path, default_ingest_filter())

    def test_parse_error_carries_line_number(self, tmp_path):
        path = tmp_path / "tweets.jsonl"
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(json.dumps(tweet_row(id="t1")) + "\n")
            fh.write("{not json}\n")
        with pytest.raises(ParseError) as exc:
            load_tweets(path, default_ingest_filter())
        assert exc.value.line == 2

    def test_bad_row_carries_line_number(self, tmp_path):
        path = tmp_path / "tweets.jsonl"
        write_jsonl(
            path,
            [tweet_row(id="t1"), tweet_row(id="t2", created_at="not-a-date")],
        )
        with pytest.raises(ParseError) as exc:
            load_tweets(path, default_ingest_filter())
        assert exc.value.line == 2

    def test_blank_lines_skipped(self, tmp_path):
        path = tmp_path / "tweets.jsonl"
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(json.dumps(tweet_row(id="t1")) + "\n\n")
            fh.write(json.dumps(tweet_row(id="t2")) + "\n")
        loaded = load_tweets(path, default_ingest_filter())
        assert len(loaded) == 2

    def test_zulu_timestamps_accepted(self, tmp_path):
        path = tmp_path / "tweets.jsonl"
        write_jsonl(path, [tweet_row(created_at="2022-03-01T12:00:00Z")])
        loaded = load_tweets(path, default_ingest_filter())
        assert loaded["t1"].created_at.tzinfo is not None

    def test_language_filter(self, tmp_path):
        path = tmp_path / "tweets.jsonl"
        write_jsonl(
            path,
            [tweet_row(id="t1", lang="en"), tweet_row(id="t2", lang="uk")],
        )
        loaded = load_tweets(path, default_ingest_filter())
        assert loaded.ids() == ["t1"]

    def test_empty_result_allowed(self, tmp_path):
        path = tmp_path / "tweets.jsonl"
        write_jsonl(path, [tweet_row(lang="de")])
        loaded = load_tweets(path, default_ingest_filter())
        assert len(loaded) == 0


class TestIngestFilter:
    def test_window_inclusive_both_ends(self):
        flt = default_ingest_filter()
        first = helpers.make_tweet("a", ["w"])
        lo = Tweet("lo", "w", dt.datetime(2022, 2, 22, 0, 0, tzinfo=UTC), "en", first.kind)
        hi = Tweet("hi", "w", dt.datetime(2022, 3, 8, 23, 59, tzinfo=UTC), "en", first.kind)
        before = Tweet("b", "w", dt.datetime(2022, 2, 21, 23, 59, tzinfo=UTC), "en", first.kind)
        after = Tweet("a2", "w", dt.datetime(2022, 3, 9, 0, 0, tzinfo=UTC), "en", first.kind)
        assert flt.admits(lo) and flt.admits(hi)
        assert not flt.admits(before) and not flt.admits(after)

    def test_window_compared_in_utc(self):
        flt = default_ingest_filter()
        # 23:30 UTC-5 on Mar 8 is already Mar 9 in UTC
        offset = dt.timezone(dt.timedelta(hours=-5))
        late = Tweet(
            "x", "w", dt.datetime(2022, 3, 8, 23, 30, tzinfo=offset), "en", TweetKind.ORIGINAL
        )
        assert not flt.admits(late)

    def test_kind_filter(self):
        flt = IngestFilter(
            date_window=(dt.date(2022, 2, 22), dt.date(2022, 3, 8)),
            languages=frozenset({"en"}),
            kinds=frozenset({TweetKind.ORIGINAL}),
        )
        orig = helpers.make_tweet("a", ["w"])
        reply = Tweet("b", "w", helpers.WINDOW_STAMP, "en", TweetKind.REPLY)
        assert flt.admits(orig)
        assert not flt.admits(reply)

    def test_invalid_window_rejected(self):
        with pytest.raises(ValueError):
            IngestFilter(
                date_window=(dt.date(2022, 3, 8), dt.date(2022, 2, 22)),
                languages=frozenset({"en"}),
                kinds=frozenset(TweetKind),
            )


def small_store() -> AnnotationStore:
    claims = [helpers.make_claim(i) for i in range(3)]
    tweets = [helpers.make_tweet(f"t{i}", ["word", f"w{i}"]) for i in range(4)]
    return AnnotationStore(ClaimSet(claims), TweetSet(tweets))


class TestAnnotationStore:
    def test_record_and_get(self):
        store = small_store()
        pair = store.record("t0", "c0000", "relevant", "alice")
        assert pair.label == Label.RELEVANT
        assert pair.annotator == "alice"
        assert pair.labeled_at is not None
        assert store.get("t0", "c0000") is pair

    def test_unknown_ids_rejected(self):
        store = small_store()
        with pytest.raises(UnknownIdError):
            store.record("nope", "c0000", "relevant", "alice")
        with pytest.raises(UnknownIdError):
            store.record("t0", "nope", "relevant", "alice")

    def test_non_terminal_label_rejected(self):
        store = small_store()
        with pytest.raises(LabelTransitionError):
            store.record("t0", "c0000", "unlabeled", "alice")

    def test_identical_relabel_is_noop(self):
        store = small_store()
        first = store.record("t0", "c0000", "relevant", "alice")
        second = store.record("t0", "c0000", "relevant", "bob")
        assert second is first
        assert second.annotator == "alice"

    def test_terminal_flip_allowed(self):
        store = small_store()
        store.record("t0", "c0000", "relevant", "alice")
        flipped = store.record("t0", "c0000", "not_relevant", "bob")
        assert flipped.label == Label.NOT_RELEVANT
        assert flipped.annotator == "bob"

    def test_seed_pair_then_label(self):
        store = small_store()
        seeded = store.seed_pair("t1", "c0001")
        assert seeded.label == Label.UNLABELED
        # seeding again does not reset anything
        store.record("t1", "c0001", "relevant", "alice")
        again = store.seed_pair("t1", "c0001")
        assert again.label == Label.RELEVANT

    def test_relevant_map_and_pairs_for_tweet(self):
        store = small_store()
        store.record("t0", "c0000", "relevant", "a")
        store.record("t0", "c0001", "relevant", "a")
        store.record("t0", "c0002", "not_relevant", "a")
        store.record("t1", "c0000", "not_relevant", "a")
        assert store.relevant_map() == {"t0": {"c0000", "c0001"}}
        assert len(store.pairs_for_tweet("t0")) == 3
        assert store.relevant_claims("t1") == set()

    def test_stats_histogram_includes_zero_bucket(self):
        store = small_store()
        store.record("t0", "c0000", "relevant", "a")
        store.record("t0", "c0001", "relevant", "a")
        store.record("t1", "c0000", "relevant", "a")
        store.record("t2", "c0000", "not_relevant", "a")
        stats = store.stats()
        assert stats.tweets_with_claim == 2
        assert stats.tweets_without_claim == 1
        assert stats.pairs_relevant == 3
        assert stats.claims_per_tweet == {0: 1, 1: 1, 2: 1}

    def test_export_import_round_trip(self, tmp_path):
        store = helpers.labeled_store(n_claims=4, tweets_per_claim=2, n_noise=5)
        path = helpers.export_store(tmp_path, store)

        claims, tweets, _ = helpers.separable_corpus(
            n_claims=4, tweets_per_claim=2, n_noise=5
        )
        fresh = AnnotationStore(ClaimSet(claims), TweetSet(tweets))
        count = fresh.import_jsonl(path)
        assert count == len(store)
        assert fresh.relevant_map() == store.relevant_map()
        for pair in store.pairs():
            got = fresh.get(pair.tweet_id, pair.claim_id)
            assert got is not None
            assert got.label == pair.label
            assert got.labeled_at == pair.labeled_at

    def test_export_sorted_by_key(self, tmp_path):
        store = small_store()
        store.record("t1", "c0001", "relevant", "a")
        store.record("t0", "c0002", "not_relevant", "a")
        store.record("t0", "c0000", "relevant", "a")
        path = tmp_path / "out.jsonl"
        store.export_jsonl(path)
        keys = [
            (row["tweet_id"], row["claim_id"])
            for row in map(json.loads, path.read_text().splitlines())
        ]
        assert keys == sorted(keys)

    def test_import_bad_row_is_parse_error(self, tmp_path):
        store = small_store()
        path = tmp_path / "ann.jsonl"
        path.write_text('{"tweet_id": "t0", "claim_id": "c0000", "label": "bogus"}\n')
        with pytest.raises(ParseError) as exc:
            store.import_jsonl(path)
        assert exc.value.line == 1

    def test_import_unknown_id_rejected(self, tmp_path):
        store = small_store()
        path = tmp_path / "ann.jsonl"
        path.write_text(
            '{"tweet_id": "ghost", "claim_id": "c0000", "label": "relevant"}\n'
        )
        with pytest.raises(UnknownIdError):
            store.import_jsonl(path)
