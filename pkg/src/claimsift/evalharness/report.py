"""Run reports: a machine-readable JSON document plus plain-text tables.

The JSON document is a pure function of the run result — no run ids, no
timestamps, keys sorted — so identical runs serialize byte-identically.
Provenance (who ran it, when, on which files) belongs to the manifest,
not the report.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Optional

from .crossval import FoldMetrics, RunConfig, RunResult, TASK_RETRIEVE
from .stats import paired_significance

REPORT_VERSION = 1

SIGNIFICANCE_ALPHA = 0.01


def report_dict(result: RunResult) -> dict:
    return {
        "report_version": REPORT_VERSION,
        "config": result.config.to_dict(),
        "dropped_pairs": result.dropped_pairs,
        "excluded_unlabeled": result.excluded_unlabeled,
        "fold_sizes": result.fold_sizes,
        "metrics": {
            m.name: {
                "per_fold": list(m.per_fold),
                "mean": m.mean,
                "ci95": m.ci95,
            }
            for m in result.metrics
        },
    }


def dumps_report(result: RunResult) -> str:
    return json.dumps(report_dict(result), sort_keys=True, indent=2) + "\n"


def _fmt(value: float) -> str:
    return f"{value:.4f}"


def _metric_order(result: RunResult) -> list[str]:
    if result.config.task == TASK_RETRIEVE:
        return [f"hit_ratio_at_{k}" for k in result.config.k_grid]
    preferred = [
        "precision_claim",
        "recall_claim",
        "f1_claim",
        "precision_no_claim",
        "recall_no_claim",
        "f1_no_claim",
        "accuracy",
    ]
    names = set(result.metric_names())
    ordered = [n for n in preferred if n in names]
    ordered.extend(sorted(names.difference(preferred)))
    return ordered


def render_text(result: RunResult) -> str:
    """One row per metric: per-fold values, then mean with its 95% CI."""
    lines = [
        f"task={result.config.task} mode={result.config.mode} "
        f"folds={result.config.n_folds} seed={result.config.seed}",
    ]
    if result.config.mode == "lco":
        lines.append(f"dropped cross-group pairs: {result.dropped_pairs}")
    if result.excluded_unlabeled:
        lines.append(f"tweets excluded (only unlabeled pairs): {result.excluded_unlabeled}")
    header = ["metric"] + [f"fold{i}" for i in range(result.config.n_folds)]
    header += ["mean", "ci95"]
    rows = [header]
    for name in _metric_order(result):
        m = result.metric(name)
        rows.append(
            [name] + [_fmt(v) for v in m.per_fold] + [_fmt(m.mean), _fmt(m.ci95)]
        )
    lines.extend(_tabulate(rows))
    return "\n".join(lines) + "\n"


def _tabulate(rows: list[list[str]]) -> list[str]:
    widths = [max(len(r[i]) for r in rows) for i in range(len(rows[0]))]
    out = []
    for r, row in enumerate(rows):
        out.append("  ".join(cell.ljust(widths[i]) for i, cell in enumerate(row)).rstrip())
        if r == 0:
            out.append("  ".join("-" * w for w in widths))
    return out


@dataclass(frozen=True)
class ComparisonRow:
    metric: str
    baseline_mean: float
    baseline_ci95: float
    candidate_mean: float
    candidate_ci95: float
    p_value: float
    degenerate: bool
    significant: bool
    best: str  # "baseline" | "candidate" | "tie"

    def __post_init__(self):
        if self.significant and not self.p_value < SIGNIFICANCE_ALPHA:
            raise ValueError("significant flag requires p_value < 0.01")


@dataclass
class ComparisonReport:
    baseline: RunResult
    candidate: RunResult
    rows: list[ComparisonRow]


def compare_runs(baseline: RunResult, candidate: RunResult) -> ComparisonReport:
    """Paired per-metric comparison of two runs over the same fold plan.

    Pairing is by fold index, so both runs must use the same mode, fold
    count, and seed for the test to mean anything.
    """
    base_cfg, cand_cfg = baseline.config, candidate.config
    if (base_cfg.mode, base_cfg.n_folds, base_cfg.seed) != (
        cand_cfg.mode,
        cand_cfg.n_folds,
        cand_cfg.seed,
    ):
        raise ValueError("runs use different fold plans; folds are not paired")
    shared = [n for n in baseline.metric_names() if n in candidate.metric_names()]
    rows = []
    for name in shared:
        b = baseline.metric(name)
        c = candidate.metric(name)
        sig = paired_significance(c.per_fold, b.per_fold)
        if c.mean > b.mean:
            best = "candidate"
        elif c.mean < b.mean:
            best = "baseline"
        else:
            best = "tie"
        rows.append(
            ComparisonRow(
                metric=name,
                baseline_mean=b.mean,
                baseline_ci95=b.ci95,
                candidate_mean=c.mean,
                candidate_ci95=c.ci95,
                p_value=sig.p_value,
                degenerate=sig.degenerate,
                significant=sig.p_value < SIGNIFICANCE_ALPHA,
                best=best,
            )
        )
    return ComparisonReport(baseline, candidate, rows)


def comparison_dict(report: ComparisonReport) -> dict:
    return {
        "report_version": REPORT_VERSION,
        "significance_alpha": SIGNIFICANCE_ALPHA,
        "significance_test": "paired two-sided t-test across folds",
        "baseline_config": report.baseline.config.to_dict(),
        "candidate_config": report.candidate.config.to_dict(),
        "metrics": {
            r.metric: {
                "baseline": {"mean": r.baseline_mean, "ci95": r.baseline_ci95},
                "candidate": {"mean": r.candidate_mean, "ci95": r.candidate_ci95},
                "p_value": r.p_value,
                "degenerate": r.degenerate,
                "significant": r.significant,
                "best": r.best,
            }
            for r in report.rows
        },
    }


def dumps_comparison(report: ComparisonReport) -> str:
    return json.dumps(comparison_dict(report), sort_keys=True, indent=2) + "\n"


def render_comparison(report: ComparisonReport) -> str:
    """Plain-text comparison table.

    The per-metric best mean is bracketed (the bold equivalent) and a `*`
    follows the p-value when it clears the 0.01 bar.
    """

    def cell(mean: float, ci: float, is_best: bool) -> str:
        body = f"{_fmt(mean)} +/-{_fmt(ci)}"
        return f"[{body}]" if is_best else body

    rows = [["metric", "baseline", "candidate", "p_value"]]
    for r in report.rows:
        p = _fmt(r.p_value) + ("*" if r.significant else "")
        if r.degenerate:
            p += " (degenerate)"
        rows.append(
            [
                r.metric,
                cell(r.baseline_mean, r.baseline_ci95, r.best == "baseline"),
                cell(r.candidate_mean, r.candidate_ci95, r.best == "candidate"),
                p,
            ]
        )
    lines = _tabulate(rows)
    lines.append("* = p < 0.01, paired two-sided t-test across folds")
    return "\n".join(lines) + "\n"


def write_text(path, content: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(content)


def load_report(path) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    version = doc.get("report_version")
    if version != REPORT_VERSION:
        raise ValueError(f"unsupported report_version {version!r}")
    return doc


def result_from_report(doc: dict) -> RunResult:
    """Rebuild a run result from its machine-readable document."""
    config = RunConfig.from_dict(doc["config"])
    metrics = [
        FoldMetrics(name, tuple(m["per_fold"]), m["mean"], m["ci95"])
        for name, m in sorted(doc["metrics"].items())
    ]
    return RunResult(
        config,
        metrics,
        doc.get("fold_sizes", []),
        dropped_pairs=doc.get("dropped_pairs", 0),
        excluded_unlabeled=doc.get("excluded_unlabeled", 0),
    )
