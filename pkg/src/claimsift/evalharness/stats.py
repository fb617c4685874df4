"""Fold-level statistics: t-based confidence intervals and paired tests."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from scipy import stats as sps


def mean_ci95(values: Sequence[float]) -> tuple[float, float]:
    """Mean and 95% confidence half-width of a small sample.

    half_width = t(0.975, n-1) * sd / sqrt(n), with the sample standard
    deviation (n-1 denominator). Needs at least two values.
    """
    n = len(values)
    if n < 2:
        raise ValueError(f"need at least 2 values, got {n}")
    mean = math.fsum(values) / n
    var = math.fsum((v - mean) ** 2 for v in values) / (n - 1)
    sd = math.sqrt(var)
    half = float(sps.t.ppf(0.975, n - 1)) * sd / math.sqrt(n)
    return mean, half


@dataclass(frozen=True)
class SignificanceResult:
    p_value: float
    # True when the paired differences have zero variance, where the t
    # statistic is undefined; p is then 1.0 for equal means, 0.0 otherwise.
    degenerate: bool = False


def paired_significance(
    a: Sequence[float], b: Sequence[float]
) -> SignificanceResult:
    """Two-sided paired t-test over per-fold metric values.

    Values must be paired by fold (same fold plan for both systems).
    """
    if len(a) != len(b):
        raise ValueError(f"length mismatch: {len(a)} vs {len(b)}")
    if len(a) < 2:
        raise ValueError(f"need at least 2 paired values, got {len(a)}")
    diffs = [x - y for x, y in zip(a, b)]
    mean_diff = math.fsum(diffs) / len(diffs)
    if all(d == diffs[0] for d in diffs):
        return SignificanceResult(1.0 if mean_diff == 0.0 else 0.0, degenerate=True)
    result = sps.ttest_rel(list(a), list(b))
    return SignificanceResult(float(result.pvalue), degenerate=False)
