"""Cross-validated runs for the detection and retrieval tasks.

A run is a pure function of (annotation store, fold plan, config, ports):
per fold it builds the task dataset, trains through the given port, and
evaluates on the held-out tweets, deriving every random draw from
seed + fold_index.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence

from ..corpus import AnnotationStore, Claim
from ..detection import (
    ClassifierPort,
    build_detection_dataset,
    evaluate_detector,
    oversample_minority,
)
from ..errors import CrossValidationError, FoldingError
from ..retrieval import (
    RankerPort,
    hit_ratio_at_k,
    rank_claims,
    sample_negatives,
)
from .folds import MODE_LCO, MODE_LTO, FoldPlan, make_lco_folds, make_lto_folds
from .stats import mean_ci95

TASK_DETECT = "detect"
TASK_RETRIEVE = "retrieve"

DEFAULT_K_GRID = (1, 3, 5, 10, 20)

CONFIG_VERSION = 1


@dataclass(frozen=True)
class RunConfig:
    task: str
    mode: str
    n_folds: int = 5
    seed: int = 0
    oversample: bool = True
    negatives_per_positive: int = 10
    k_grid: tuple[int, ...] = DEFAULT_K_GRID
    threshold: float = 0.5
    # Free-form port descriptors, echoed into reports so a run document
    # says which backends produced it.
    ports: tuple[tuple[str, str], ...] = ()

    def __post_init__(self):
        if self.task not in (TASK_DETECT, TASK_RETRIEVE):
            raise ValueError(f"unknown task {self.task!r}")
        if self.mode not in (MODE_LTO, MODE_LCO):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.n_folds < 2:
            raise ValueError(f"n_folds must be >= 2, got {self.n_folds}")
        if self.negatives_per_positive < 1:
            raise ValueError("negatives_per_positive must be >= 1")
        if not self.k_grid or any(k < 1 for k in self.k_grid):
            raise ValueError("k_grid must be non-empty positive integers")

    def to_dict(self) -> dict:
        return {
            "config_version": CONFIG_VERSION,
            "task": self.task,
            "mode": self.mode,
            "n_folds": self.n_folds,
            "seed": self.seed,
            "oversample": self.oversample,
            "negatives_per_positive": self.negatives_per_positive,
            "k_grid": list(self.k_grid),
            "threshold": self.threshold,
            "ports": {name: value for name, value in self.ports},
        }

    @classmethod
    def from_dict(cls, raw: dict) -> "RunConfig":
        version = raw.get("config_version", CONFIG_VERSION)
        if version != CONFIG_VERSION:
            raise ValueError(f"unsupported config_version {version}")
        return cls(
            task=raw["task"],
            mode=raw["mode"],
            n_folds=int(raw.get("n_folds", 5)),
            seed=int(raw.get("seed", 0)),
            oversample=bool(raw.get("oversample", True)),
            negatives_per_positive=int(raw.get("negatives_per_positive", 10)),
            k_grid=tuple(int(k) for k in raw.get("k_grid", DEFAULT_K_GRID)),
            threshold=float(raw.get("threshold", 0.5)),
            ports=tuple(sorted(raw.get("ports", {}).items())),
        )


def load_run_config(path: str | os.PathLike) -> RunConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return RunConfig.from_dict(json.load(fh))


@dataclass(frozen=True)
class FoldMetrics:
    name: str
    per_fold: tuple[float, ...]
    mean: float
    ci95: float

    def __post_init__(self):
        expected = sum(self.per_fold) / len(self.per_fold)
        if abs(self.mean - expected) > 1e-12:
            raise ValueError(f"{self.name}: mean {self.mean} != fold mean {expected}")


def fold_metrics(name: str, values: Sequence[float]) -> FoldMetrics:
    mean, half = mean_ci95(values)
    return FoldMetrics(name, tuple(values), mean, half)


@dataclass
class RunResult:
    config: RunConfig
    metrics: list[FoldMetrics]
    fold_sizes: list[dict[str, int]]
    dropped_pairs: int = 0
    excluded_unlabeled: int = 0

    def metric(self, name: str) -> FoldMetrics:
        for m in self.metrics:
            if m.name == name:
                return m
        raise KeyError(name)

    def metric_names(self) -> list[str]:
        return [m.name for m in self.metrics]


@dataclass
class Ports:
    """Trainable backends for a run, plus their descriptors for the report."""

    classifier: Optional[ClassifierPort] = None
    ranker: Optional[RankerPort] = None
    descriptors: dict[str, str] = field(default_factory=dict)


def plan_for(
    store: AnnotationStore, config: RunConfig
) -> FoldPlan:
    """Build the fold plan the config asks for, over the store's labeled tweets."""
    if config.mode == MODE_LCO:
        return make_lco_folds(
            store, store.claims.ids(), n_folds=config.n_folds, seed=config.seed
        )
    dataset = build_detection_dataset(store)
    tweet_ids = [item.tweet_id for item in dataset.items]
    return make_lto_folds(tweet_ids, n_folds=config.n_folds, seed=config.seed)


def cross_validate(
    task: str,
    plan: FoldPlan,
    ports: Ports,
    config: RunConfig,
    store: AnnotationStore,
) -> RunResult:
    if task != config.task:
        raise ValueError(f"task {task!r} does not match config task {config.task!r}")
    if plan.mode != config.mode:
        raise FoldingError(f"plan mode {plan.mode!r} does not match config")
    if plan.n_folds != config.n_folds:
        raise FoldingError(f"plan has {plan.n_folds} folds, config wants {config.n_folds}")
    config = replace(
        config, ports=tuple(sorted(ports.descriptors.items()))
    )
    if task == TASK_DETECT:
        return _run_detect(plan, ports, config, store)
    return _run_retrieve(plan, ports, config, store)


def _collect(per_fold: dict[str, list[float]]) -> list[FoldMetrics]:
    return [fold_metrics(name, values) for name, values in sorted(per_fold.items())]


def _run_detect(
    plan: FoldPlan, ports: Ports, config: RunConfig, store: AnnotationStore
) -> RunResult:
    if ports.classifier is None:
        raise ValueError("detect task needs a classifier port")
    dataset = build_detection_dataset(store)
    per_fold: dict[str, list[float]] = {}
    sizes: list[dict[str, int]] = []
    for fold in plan.folds:
        try:
            train = dataset.subset(fold.train_tweets)
            valid = dataset.subset(fold.valid_tweets)
            test = dataset.subset(fold.test_tweets)
            if config.oversample:
                train = oversample_minority(train, seed=config.seed + fold.index)
            model = ports.classifier.fit(train, valid)
            metrics = evaluate_detector(model, test, threshold=config.threshold)
        except CrossValidationError:
            raise
        except Exception as exc:
            raise CrossValidationError(fold.index, exc) from exc
        sizes.append(
            {"train": len(train), "valid": len(valid), "test": len(test)}
        )
        for name, value in metrics.flat().items():
            per_fold.setdefault(name, []).append(value)
    return RunResult(
        config,
        _collect(per_fold),
        sizes,
        dropped_pairs=plan.dropped_pairs,
        excluded_unlabeled=dataset.excluded_unlabeled,
    )


def _usable_positives(
    plan: FoldPlan, relevant: dict[str, set[str]]
) -> dict[str, set[str]]:
    """Relevant pairs that survive the claim-disjointness rule.

    Under LCO a pair is kept only when its claim's group matches the fold
    its tweet tests in; everything survives under LTO.
    """
    if plan.mode == MODE_LTO:
        return {t: set(cs) for t, cs in relevant.items()}
    tweet_fold: dict[str, int] = {}
    claim_group: dict[str, int] = {}
    for fold in plan.folds:
        for t in fold.test_tweets:
            tweet_fold[t] = fold.index
        for c in fold.test_claims:
            claim_group[c] = fold.index
    out: dict[str, set[str]] = {}
    for tweet_id, claims in relevant.items():
        if tweet_id not in tweet_fold:
            continue
        kept = {c for c in claims if claim_group.get(c) == tweet_fold[tweet_id]}
        if kept:
            out[tweet_id] = kept
    return out


def _run_retrieve(
    plan: FoldPlan, ports: Ports, config: RunConfig, store: AnnotationStore
) -> RunResult:
    if ports.ranker is None:
        raise ValueError("retrieve task needs a ranker port")
    relevant = store.relevant_map()
    usable = _usable_positives(plan, relevant)
    all_claim_ids = store.claims.ids()
    all_claims: list[Claim] = list(store.claims)
    per_fold: dict[str, list[float]] = {}
    sizes: list[dict[str, int]] = []
    for fold in plan.folds:
        group = set(fold.test_claims)
        if plan.mode == MODE_LCO:
            pool_ids = [c for c in all_claim_ids if c not in group]
            candidates = [c for c in all_claims if c.id in group]
        else:
            pool_ids = list(all_claim_ids)
            candidates = all_claims
        positives = [
            (t, c)
            for t in fold.train_tweets
            for c in sorted(usable.get(t, ()))
        ]
        try:
            if not positives:
                raise ValueError("no positive training pairs in fold")
            train = sample_negatives(
                positives,
                pool_ids,
                n=config.negatives_per_positive,
                seed=config.seed + fold.index,
                relevant=relevant,
            )
            tweet_texts = {
                t: store.tweets[t].text for t, _ in positives
            }
            claim_texts = {c.id: c.text for c in all_claims}
            fitted = ports.ranker.fit(train, tweet_texts, claim_texts)
            rankings = {}
            truth = {}
            for t in fold.test_tweets:
                wanted = usable.get(t)
                if not wanted:
                    continue
                rankings[t] = rank_claims(fitted, store.tweets[t].text, candidates)
                truth[t] = wanted
            if not rankings:
                raise ValueError("no positive test tweets in fold")
            metrics = {
                f"hit_ratio_at_{k}": hit_ratio_at_k(rankings, truth, k)
                for k in config.k_grid
            }
        except CrossValidationError:
            raise
        except Exception as exc:
            raise CrossValidationError(fold.index, exc) from exc
        sizes.append(
            {
                "train": len(train),
                "valid": len(fold.valid_tweets),
                "test": len(rankings),
            }
        )
        for name, value in metrics.items():
            per_fold.setdefault(name, []).append(value)
    return RunResult(
        config,
        _collect(per_fold),
        sizes,
        dropped_pairs=plan.dropped_pairs,
        excluded_unlabeled=0,
    )
