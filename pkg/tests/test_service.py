"""HTTP service tests: prediction endpoint, annotation leases, progress."""

import json

import httpx
import pytest

from claimsift.candidates import PairPool, PoolEntry
from claimsift.corpus import AnnotationStore, ClaimSet, TweetSet
from claimsift.detection import TfidfLogisticPort, build_detection_dataset
from claimsift.gateway.mock import SyncASGITransport
from claimsift.retrieval import Bm25Ranker
from claimsift.service.app import ServiceState, create_app

from helpers import labeled_store, make_claim, make_tweet


class FakeClock:
    """Monotonic stand-in so lease expiry is a method call, not a sleep."""

    def __init__(self, start: float = 1000.0):
        self.now = start

    def __call__(self) -> float:
        return self.now

    def advance(self, seconds: float) -> None:
        self.now += seconds


def make_client(state: ServiceState) -> httpx.Client:
    app = create_app(state)
    return httpx.Client(
        base_url="http://service.test", transport=SyncASGITransport(app)
    )


def annotation_state(**kwargs) -> tuple[ServiceState, FakeClock]:
    """Two claims, three tweets, four seeded pairs in a known serve order."""
    claims = ClaimSet([make_claim(1), make_claim(2)])
    tweets = TweetSet(
        [
            make_tweet("t00001", ["topic1word0"]),
            make_tweet("t00002", ["topic1word1"]),
            make_tweet("t00003", ["topic2word0"]),
        ]
    )
    store = AnnotationStore(claims, tweets)
    pool = PairPool(
        [
            PoolEntry("c0001", "t00001", 1, 0.9),
            PoolEntry("c0001", "t00002", 2, 0.8),
            PoolEntry("c0002", "t00001", 1, 0.85),
            PoolEntry("c0002", "t00003", 2, 0.7),
        ],
        k=5,
    )
    clock = FakeClock()
    state = ServiceState(store, pool=pool, clock=clock, **kwargs)
    return state, clock


# serve order sorted by (rank, claim_id, tweet_id)
EXPECTED_ORDER = [
    ("t00001", "c0001"),
    ("t00001", "c0002"),
    ("t00002", "c0001"),
    ("t00003", "c0002"),
]


class TestHealthAndPredict:
    def test_healthz(self):
        state, _ = annotation_state()
        with make_client(state) as client:
            resp = client.get("/healthz")
        assert resp.status_code == 200
        assert resp.json() == {"status": "ok"}

    def test_predict_empty_text_rejected(self):
        state, _ = annotation_state()
        with make_client(state) as client:
            resp = client.post("/predict", json={"text": "   "})
        assert resp.status_code == 400
        assert resp.json()["code"] == "empty_text"

    def test_predict_missing_field_is_validation_error(self):
        state, _ = annotation_state()
        with make_client(state) as client:
            resp = client.post("/predict", json={})
        assert resp.status_code == 400
        body = resp.json()
        assert body["code"] == "validation_error"
        assert "text" in body["message"]

    def test_predict_without_models_is_503(self):
        state, _ = annotation_state()
        with make_client(state) as client:
            resp = client.post("/predict", json={"text": "some tweet"})
        assert resp.status_code == 503
        assert resp.json()["code"] == "models_not_loaded"

    @pytest.fixture()
    def trained_state(self):
        store = labeled_store(n_claims=6, tweets_per_claim=6, n_noise=40, seed=11)
        dataset = build_detection_dataset(store)
        detector = TfidfLogisticPort(iterations=80).fit(dataset)
        ranker = Bm25Ranker(list(store.claims))
        return ServiceState(store, detector=detector, ranker=ranker, top_n=3)

    def test_predict_happy_path(self, trained_state):
        claim = list(trained_state.store.claims)[0]
        with make_client(trained_state) as client:
            resp = client.post("/predict", json={"text": claim.text})
        assert resp.status_code == 200
        body = resp.json()
        assert body["gate"] == "claim"
        assert 0.5 <= body["gate_probability"] <= 1.0
        assert [r["rank"] for r in body["results"]] == [1, 2, 3]
        assert body["results"][0]["claim_id"] == claim.id
        for row in body["results"]:
            assert 0.0 <= row["score"] <= 1.0

    def test_predict_gated_out_has_no_results(self, trained_state):
        with make_client(trained_state) as client:
            resp = client.post(
                "/predict", json={"text": "noise0 noise3 noise7 noise11 noise19"}
            )
        assert resp.status_code == 200
        body = resp.json()
        assert body["gate"] == "no_claim"
        assert body["results"] == []


class TestAnnotationLeases:
    def test_missing_annotator_rejected(self):
        state, _ = annotation_state()
        with make_client(state) as client:
            resp = client.get("/pairs/next")
            assert resp.status_code == 400
            assert resp.json()["code"] == "missing_annotator"
            resp = client.get("/pairs/next", params={"annotator": "  "})
            assert resp.status_code == 400

    def test_first_pair_is_lowest_rank(self):
        state, _ = annotation_state()
        with make_client(state) as client:
            resp = client.get("/pairs/next", params={"annotator": "alice"})
        assert resp.status_code == 200
        body = resp.json()
        assert (body["tweet_id"], body["claim_id"]) == EXPECTED_ORDER[0]
        assert body["rank"] == 1
        assert body["similarity"] == 0.9
        assert body["tweet_text"] == "topic1word0"
        assert body["claim_verdict"] == "false"
        assert body["lease_expires_at"]  # ISO stamp, non-empty

    def test_own_lease_reserved_on_repeat(self):
        state, _ = annotation_state()
        with make_client(state) as client:
            first = client.get("/pairs/next", params={"annotator": "alice"}).json()
            again = client.get("/pairs/next", params={"annotator": "alice"}).json()
        assert (first["tweet_id"], first["claim_id"]) == (
            again["tweet_id"],
            again["claim_id"],
        )

    def test_second_annotator_skips_leased_pair(self):
        state, _ = annotation_state()
        with make_client(state) as client:
            a = client.get("/pairs/next", params={"annotator": "alice"}).json()
            b = client.get("/pairs/next", params={"annotator": "bob"}).json()
        assert (a["tweet_id"], a["claim_id"]) == EXPECTED_ORDER[0]
        assert (b["tweet_id"], b["claim_id"]) == EXPECTED_ORDER[1]

    def test_expired_lease_is_reissued(self):
        state, clock = annotation_state(lease_ttl_seconds=60.0)
        with make_client(state) as client:
            a = client.get("/pairs/next", params={"annotator": "alice"}).json()
            clock.advance(61.0)
            b = client.get("/pairs/next", params={"annotator": "bob"}).json()
        assert (b["tweet_id"], b["claim_id"]) == (a["tweet_id"], a["claim_id"])

    def test_unexpired_lease_is_not_reissued(self):
        state, clock = annotation_state(lease_ttl_seconds=60.0)
        with make_client(state) as client:
            client.get("/pairs/next", params={"annotator": "alice"})
            clock.advance(59.0)
            b = client.get("/pairs/next", params={"annotator": "bob"}).json()
        assert (b["tweet_id"], b["claim_id"]) == EXPECTED_ORDER[1]

    def test_label_then_next_moves_on(self):
        state, _ = annotation_state()
        with make_client(state) as client:
            first = client.get("/pairs/next", params={"annotator": "alice"}).json()
            resp = client.post(
                f"/pairs/{first['tweet_id']}/{first['claim_id']}/label",
                json={"label": "relevant", "annotator": "alice"},
            )
            assert resp.status_code == 200
            body = resp.json()
            assert body["label"] == "relevant"
            assert body["annotator"] == "alice"
            assert body["labeled_at"]
            nxt = client.get("/pairs/next", params={"annotator": "alice"}).json()
        assert (nxt["tweet_id"], nxt["claim_id"]) == EXPECTED_ORDER[1]

    def test_exhaustion_returns_204(self):
        state, _ = annotation_state()
        with make_client(state) as client:
            while True:
                resp = client.get("/pairs/next", params={"annotator": "solo"})
                if resp.status_code == 204:
                    break
                body = resp.json()
                client.post(
                    f"/pairs/{body['tweet_id']}/{body['claim_id']}/label",
                    json={"label": "not_relevant", "annotator": "solo"},
                )
        assert resp.status_code == 204
        assert len(state.store) == 4
        assert all(p.annotator == "solo" for p in state.store.pairs())

    def test_unknown_pair_404(self):
        state, _ = annotation_state()
        with make_client(state) as client:
            resp = client.post(
                "/pairs/t00001/c9999/label",
                json={"label": "relevant", "annotator": "alice"},
            )
        assert resp.status_code == 404
        assert resp.json()["code"] == "unknown_pair"

    def test_double_label_409_unless_relabel(self):
        state, _ = annotation_state()
        with make_client(state) as client:
            client.post(
                "/pairs/t00001/c0001/label",
                json={"label": "relevant", "annotator": "alice"},
            )
            dup = client.post(
                "/pairs/t00001/c0001/label",
                json={"label": "not_relevant", "annotator": "bob"},
            )
            assert dup.status_code == 409
            assert dup.json()["code"] == "already_labeled"
            redo = client.post(
                "/pairs/t00001/c0001/label",
                json={"label": "not_relevant", "annotator": "bob", "relabel": True},
            )
            assert redo.status_code == 200
            assert redo.json()["label"] == "not_relevant"

    def test_bad_label_value_rejected(self):
        state, _ = annotation_state()
        with make_client(state) as client:
            resp = client.post(
                "/pairs/t00001/c0001/label",
                json={"label": "maybe", "annotator": "alice"},
            )
        assert resp.status_code == 400
        assert resp.json()["code"] == "validation_error"

    def test_labeling_releases_lease_for_others(self):
        state, _ = annotation_state()
        with make_client(state) as client:
            first = client.get("/pairs/next", params={"annotator": "alice"}).json()
            client.post(
                f"/pairs/{first['tweet_id']}/{first['claim_id']}/label",
                json={"label": "relevant", "annotator": "alice"},
            )
            b = client.get("/pairs/next", params={"annotator": "bob"}).json()
        assert (b["tweet_id"], b["claim_id"]) == EXPECTED_ORDER[1]


class TestPersistenceAndProgress:
    def test_labels_autosaved_and_reloaded(self, tmp_path):
        path = str(tmp_path / "annotations.jsonl")
        state, _ = annotation_state(annotations_path=path)
        with make_client(state) as client:
            client.post(
                "/pairs/t00001/c0001/label",
                json={"label": "relevant", "annotator": "alice"},
            )
        rows = [
            json.loads(line)
            for line in open(path, encoding="utf-8")
            if line.strip()
        ]
        assert len(rows) == 4  # seeded pairs persist too, one labeled
        labeled = [r for r in rows if r["label"] == "relevant"]
        assert len(labeled) == 1
        assert labeled[0]["tweet_id"] == "t00001"

        # a fresh state over the same file resumes where we stopped
        resumed, _ = annotation_state(annotations_path=path)
        with make_client(resumed) as client:
            nxt = client.get("/pairs/next", params={"annotator": "carol"}).json()
        assert (nxt["tweet_id"], nxt["claim_id"]) == EXPECTED_ORDER[1]

    def test_progress_counts(self):
        state, _ = annotation_state()
        with make_client(state) as client:
            before = client.get("/progress").json()
            client.post(
                "/pairs/t00001/c0001/label",
                json={"label": "relevant", "annotator": "alice"},
            )
            client.post(
                "/pairs/t00002/c0001/label",
                json={"label": "not_relevant", "annotator": "bob"},
            )
            after = client.get("/progress").json()
        assert before == {
            "labeled": 0,
            "total": 4,
            "relevant": 0,
            "not_relevant": 0,
            "per_annotator": {},
            "claims_covered": 0,
            "claims_total": 2,
        }
        assert after["labeled"] == 2
        assert after["relevant"] == 1
        assert after["not_relevant"] == 1
        assert after["per_annotator"] == {"alice": 1, "bob": 1}
        assert after["claims_covered"] == 1
        assert after["claims_total"] == 2

    def test_console_missing_404(self):
        state, _ = annotation_state()
        with make_client(state) as client:
            resp = client.get("/console")
        assert resp.status_code == 404
        assert resp.json()["code"] == "console_not_built"

    def test_console_serves_bundle_when_built(self, tmp_path):
        bundle = tmp_path / "dist"
        bundle.mkdir()
        (bundle / "index.html").write_text(
            "<!doctype html><title>console</title>", encoding="utf-8"
        )
        state, _ = annotation_state(console_dir=str(bundle))
        with make_client(state) as client:
            resp = client.get("/console/")
        assert resp.status_code == 200
        assert "console" in resp.text

    def test_bad_lease_ttl_rejected(self):
        claims = ClaimSet([make_claim(1)])
        tweets = TweetSet([make_tweet("t00001", ["topic1word0"])])
        store = AnnotationStore(claims, tweets)
        with pytest.raises(ValueError):
            ServiceState(store, lease_ttl_seconds=0.0)
