"""Cross-validated runs, their reports, and run comparison."""

import json

import pytest

import helpers
from claimsift.detection import TfidfLogisticPort
from claimsift.errors import CrossValidationError
from claimsift.evalharness import (
    MODE_LCO,
    MODE_LTO,
    TASK_DETECT,
    TASK_RETRIEVE,
    FoldMetrics,
    Ports,
    RunConfig,
    compare_runs,
    cross_validate,
    dumps_comparison,
    dumps_report,
    fold_metrics,
    load_report,
    load_run_config,
    plan_for,
    render_comparison,
    render_text,
    report_dict,
    result_from_report,
)
from claimsift.retrieval import Bm25Ranker, TfidfCosineRanker


def store():
    return helpers.labeled_store(n_claims=10, tweets_per_claim=6, n_noise=60)


def detect_config(**overrides):
    kwargs = dict(task=TASK_DETECT, mode=MODE_LTO, n_folds=3, seed=4)
    kwargs.update(overrides)
    return RunConfig(**kwargs)


def retrieve_config(**overrides):
    kwargs = dict(
        task=TASK_RETRIEVE,
        mode=MODE_LCO,
        n_folds=3,
        seed=4,
        negatives_per_positive=3,
        k_grid=(1, 3, 5),
    )
    kwargs.update(overrides)
    return RunConfig(**kwargs)


def run_detect(st=None, config=None):
    st = st or store()
    config = config or detect_config()
    plan = plan_for(st, config)
    ports = Ports(classifier=TfidfLogisticPort(iterations=80),
                  descriptors={"classifier": "tfidf-logistic"})
    return cross_validate(TASK_DETECT, plan, ports, config, st)


def run_retrieve(st=None, config=None, ranker=None):
    st = st or store()
    config = config or retrieve_config()
    plan = plan_for(st, config)
    claims = list(st.claims)
    ports = Ports(ranker=ranker or Bm25Ranker(claims),
                  descriptors={"ranker": "bm25"})
    return cross_validate(TASK_RETRIEVE, plan, ports, config, st)


class TestRunConfig:
    def test_round_trip(self):
        config = retrieve_config(ports=(("ranker", "bm25"),))
        again = RunConfig.from_dict(config.to_dict())
        assert again == config

    def test_load_from_file(self, tmp_path):
        path = tmp_path / "config.json"
        path.write_text(json.dumps(detect_config().to_dict()))
        assert load_run_config(path) == detect_config()

    def test_validation(self):
        with pytest.raises(ValueError):
            RunConfig(task="bogus", mode=MODE_LTO)
        with pytest.raises(ValueError):
            RunConfig(task=TASK_DETECT, mode="bogus")
        with pytest.raises(ValueError):
            RunConfig(task=TASK_DETECT, mode=MODE_LTO, n_folds=1)
        with pytest.raises(ValueError):
            RunConfig(task=TASK_RETRIEVE, mode=MODE_LCO, k_grid=())

    def test_version_gate(self):
        raw = detect_config().to_dict()
        raw["config_version"] = 99
        with pytest.raises(ValueError):
            RunConfig.from_dict(raw)


class TestFoldMetrics:
    def test_mean_must_match(self):
        with pytest.raises(ValueError):
            FoldMetrics("m", (0.4, 0.6), 0.7, 0.1)

    def test_builder(self):
        m = fold_metrics("m", [0.4, 0.6])
        assert m.mean == pytest.approx(0.5)
        assert m.per_fold == (0.4, 0.6)


class TestDetectRun:
    def test_metrics_present_and_learnable(self):
        result = run_detect()
        assert result.metric_names() == sorted(result.metric_names())
        f1 = result.metric("f1_claim")
        assert len(f1.per_fold) == 3
        # topic and noise vocabularies are disjoint: near-perfect gate
        assert f1.mean > 0.9
        assert result.metric("accuracy").mean > 0.9

    def test_fold_sizes_recorded(self):
        result = run_detect()
        assert len(result.fold_sizes) == 3
        for size in result.fold_sizes:
            assert size["train"] > 0 and size["test"] > 0
            # oversampling balanced the classes, so train size is even
            assert size["train"] % 2 == 0

    def test_ports_echoed_into_config(self):
        result = run_detect()
        assert dict(result.config.ports) == {"classifier": "tfidf-logistic"}

    def test_deterministic(self):
        a = run_detect()
        b = run_detect()
        assert report_dict(a) == report_dict(b)

    def test_task_mismatch_rejected(self):
        st = store()
        config = detect_config()
        plan = plan_for(st, config)
        ports = Ports(classifier=TfidfLogisticPort())
        with pytest.raises(ValueError):
            cross_validate(TASK_RETRIEVE, plan, ports, config, st)

    def test_fold_count_mismatch_rejected(self):
        st = store()
        plan = plan_for(st, detect_config(n_folds=3))
        ports = Ports(classifier=TfidfLogisticPort())
        with pytest.raises(Exception):
            cross_validate(TASK_DETECT, plan, ports, detect_config(n_folds=4), st)

    def test_missing_port_rejected(self):
        st = store()
        config = detect_config()
        plan = plan_for(st, config)
        with pytest.raises(ValueError):
            cross_validate(TASK_DETECT, plan, Ports(), config, st)

    def test_failure_names_fold(self):
        class ExplodingPort:
            def __init__(self):
                self.calls = 0

            def fit(self, train, valid=None):
                if self.calls == 1:
                    raise RuntimeError("port died")
                self.calls += 1
                return TfidfLogisticPort(iterations=5).fit(train)

        st = store()
        config = detect_config()
        plan = plan_for(st, config)
        with pytest.raises(CrossValidationError) as exc:
            cross_validate(
                TASK_DETECT, plan, Ports(classifier=ExplodingPort()), config, st
            )
        assert exc.value.fold_index == 1


class TestRetrieveRun:
    def test_lco_hit_ratios(self):
        result = run_retrieve()
        names = [f"hit_ratio_at_{k}" for k in (1, 3, 5)]
        assert sorted(result.metric_names()) == sorted(names)
        values = [result.metric(n).mean for n in names]
        assert values == sorted(values)  # monotone in k
        # lexically separable corpus: BM25 should nail the held-out claims
        assert result.metric("hit_ratio_at_1").mean > 0.9

    def test_lto_mode(self):
        config = retrieve_config(mode=MODE_LTO)
        result = run_retrieve(config=config)
        assert result.metric("hit_ratio_at_5").mean > 0.9
        assert result.dropped_pairs == 0

    def test_deterministic(self):
        a = run_retrieve()
        b = run_retrieve()
        assert report_dict(a) == report_dict(b)

    def test_missing_ranker_rejected(self):
        st = store()
        config = retrieve_config()
        plan = plan_for(st, config)
        with pytest.raises(ValueError):
            cross_validate(TASK_RETRIEVE, plan, Ports(), config, st)


class TestReports:
    def test_report_is_byte_stable(self):
        a = dumps_report(run_detect())
        b = dumps_report(run_detect())
        assert a == b
        assert a.endswith("\n")

    def test_report_has_no_provenance_keys(self):
        doc = report_dict(run_detect())
        flat = json.dumps(doc)
        assert "run_id" not in flat
        assert "timestamp" not in flat
        assert "created_at" not in flat

    def test_load_round_trip(self, tmp_path):
        result = run_retrieve()
        path = tmp_path / "report.json"
        path.write_text(dumps_report(result))
        doc = load_report(path)
        again = result_from_report(doc)
        assert again.config == result.config
        assert [m.name for m in again.metrics] == [m.name for m in result.metrics]
        for m in result.metrics:
            assert again.metric(m.name).per_fold == m.per_fold

    def test_load_rejects_unknown_version(self, tmp_path):
        path = tmp_path / "report.json"
        path.write_text('{"report_version": 9}')
        with pytest.raises(ValueError):
            load_report(path)

    def test_render_text_contains_all_metrics(self):
        result = run_detect()
        text = render_text(result)
        for name in result.metric_names():
            assert name in text
        assert "mean" in text and "ci95" in text

    def test_render_orders_hit_ratios_by_k(self):
        text = render_text(run_retrieve())
        positions = [text.index(f"hit_ratio_at_{k}") for k in (1, 3, 5)]
        assert positions == sorted(positions)

    def test_lco_render_mentions_dropped(self):
        text = render_text(run_retrieve())
        assert "dropped cross-group pairs" in text


class TestComparison:
    def test_best_and_rows(self):
        st = store()
        base = run_retrieve(st=st)
        cand = run_retrieve(st=st, ranker=TfidfCosineRanker(list(st.claims)))
        report = compare_runs(base, cand)
        assert {r.metric for r in report.rows} == set(base.metric_names())
        for r in report.rows:
            if r.best == "candidate":
                assert r.candidate_mean > r.baseline_mean
            elif r.best == "baseline":
                assert r.baseline_mean > r.candidate_mean
            else:
                assert r.baseline_mean == r.candidate_mean

    def test_identical_runs_are_degenerate_ties(self):
        a = run_retrieve()
        b = run_retrieve()
        report = compare_runs(a, b)
        for r in report.rows:
            assert r.best == "tie"
            assert r.degenerate
            assert r.p_value == 1.0
            assert not r.significant

    def test_mismatched_plans_rejected(self):
        a = run_retrieve(config=retrieve_config(seed=4))
        b = run_retrieve(config=retrieve_config(seed=5))
        with pytest.raises(ValueError):
            compare_runs(a, b)

    def test_render_marks_best_and_significance(self):
        st = store()
        base = run_retrieve(st=st)
        cand = run_retrieve(st=st, ranker=TfidfCosineRanker(list(st.claims)))
        report = compare_runs(base, cand)
        text = render_comparison(report)
        assert "p < 0.01" in text
        for r in report.rows:
            if r.best != "tie":
                assert "[" in text

    def test_comparison_json_stable(self):
        st = store()
        base = run_retrieve(st=st)
        cand = run_retrieve(st=st, ranker=TfidfCosineRanker(list(st.claims)))
        a = dumps_comparison(compare_runs(base, cand))
        b = dumps_comparison(compare_runs(base, cand))
        assert a == b
