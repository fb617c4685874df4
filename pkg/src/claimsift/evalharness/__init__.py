"""Cross-validation harness: fold plans, runs, statistics, reports."""

from .crossval import (
    DEFAULT_K_GRID,
    TASK_DETECT,
    TASK_RETRIEVE,
    FoldMetrics,
    Ports,
    RunConfig,
    RunResult,
    cross_validate,
    fold_metrics,
    load_run_config,
    plan_for,
)
from .folds import (
    DEFAULT_N_FOLDS,
    MODE_LCO,
    MODE_LTO,
    Fold,
    FoldPlan,
    make_lco_folds,
    make_lto_folds,
)
from .report import (
    ComparisonReport,
    ComparisonRow,
    compare_runs,
    comparison_dict,
    dumps_comparison,
    dumps_report,
    load_report,
    render_comparison,
    render_text,
    report_dict,
    result_from_report,
)
from .stats import SignificanceResult, mean_ci95, paired_significance

__all__ = [
    "DEFAULT_K_GRID",
    "DEFAULT_N_FOLDS",
    "MODE_LCO",
    "MODE_LTO",
    "TASK_DETECT",
    "TASK_RETRIEVE",
    "ComparisonReport",
    "ComparisonRow",
    "Fold",
    "FoldMetrics",
    "FoldPlan",
    "Ports",
    "RunConfig",
    "RunResult",
    "SignificanceResult",
    "compare_runs",
    "comparison_dict",
    "cross_validate",
    "dumps_comparison",
    "dumps_report",
    "fold_metrics",
    "load_report",
    "load_run_config",
    "make_lco_folds",
    "make_lto_folds",
    "mean_ci95",
    "paired_significance",
    "plan_for",
    "render_comparison",
    "render_text",
    "report_dict",
    "result_from_report",
]
