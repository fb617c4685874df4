"""Confidence intervals and paired tests against an independent oracle.

The oracle computes Student-t probabilities through mpmath's regularized
incomplete beta, a different code path from the scipy implementation under
test. Critical values are frozen table constants, cross-checked by pushing
them back through the oracle CDF.
"""

import math
import random
import statistics

import mpmath
import pytest

from claimsift.evalharness import mean_ci95, paired_significance

mpmath.mp.dps = 30

# two-sided 97.5% critical values for small degrees of freedom, computed
# to 25 digits with mpmath and rounded to double precision
T_CRIT = {
    1: 12.706204736174705,
    2: 4.302652729749464,
    3: 3.1824463052837096,
    4: 2.7764451051977944,
    9: 2.2621571627982055,
}


def t_cdf(t: float, df: int) -> float:
    """Student-t CDF via the regularized incomplete beta."""
    x = df / (df + t * t)
    tail = 0.5 * float(mpmath.betainc(df / 2.0, 0.5, 0, x, regularized=True))
    return 1.0 - tail if t >= 0 else tail


def two_sided_p(t: float, df: int) -> float:
    x = df / (df + t * t)
    return float(mpmath.betainc(df / 2.0, 0.5, 0, x, regularized=True))


def oracle_ci95(values):
    n = len(values)
    mean = statistics.fmean(values)
    sd = statistics.stdev(values)
    return mean, T_CRIT[n - 1] * sd / math.sqrt(n)


class TestCriticalValues:
    def test_frozen_constants_satisfy_the_cdf(self):
        for df, crit in T_CRIT.items():
            assert t_cdf(crit, df) == pytest.approx(0.975, abs=1e-12)

    def test_closed_forms(self):
        # df=1 is Cauchy: Q(0.975) = cot(pi/40); df=2 solves in radicals
        assert T_CRIT[1] == pytest.approx(1.0 / math.tan(math.pi / 40), rel=1e-14)
        assert T_CRIT[2] == pytest.approx(0.95 * math.sqrt(2.0 / 0.0975), rel=1e-14)


class TestMeanCi95:
    def test_two_point_oracle(self):
        mean, half = mean_ci95([0.7, 0.9])
        assert mean == pytest.approx(0.8, abs=1e-15)
        # sd = sqrt(0.02), so half = t(0.975, 1) * 0.1
        assert half == pytest.approx(1.2706204736174696, abs=1e-9)

    def test_five_point_oracle(self):
        values = [0.61, 0.74, 0.70, 0.68, 0.81]
        mean, half = mean_ci95(values)
        want_mean, want_half = oracle_ci95(values)
        assert mean == pytest.approx(want_mean, abs=1e-12)
        assert half == pytest.approx(want_half, abs=1e-9)

    def test_constant_sample_has_zero_width(self):
        mean, half = mean_ci95([0.5, 0.5, 0.5])
        assert mean == 0.5
        assert half == 0.0

    def test_scale_and_shift(self):
        values = [0.2, 0.5, 0.9, 0.4]
        _, half = mean_ci95(values)
        mean2, half2 = mean_ci95([3 * v + 1 for v in values])
        assert half2 == pytest.approx(3 * half, abs=1e-9)
        assert mean2 == pytest.approx(3 * statistics.fmean(values) + 1, abs=1e-12)

    def test_random_sweep_against_oracle(self):
        rng = random.Random(77)
        for _ in range(200):
            values = [rng.uniform(0.0, 1.0) for _ in range(5)]
            mean, half = mean_ci95(values)
            want_mean, want_half = oracle_ci95(values)
            assert abs(mean - want_mean) < 1e-12
            assert abs(half - want_half) < 1e-6

    def test_too_few_values(self):
        with pytest.raises(ValueError):
            mean_ci95([0.5])
        with pytest.raises(ValueError):
            mean_ci95([])


def oracle_paired_p(a, b):
    diffs = [x - y for x, y in zip(a, b)]
    n = len(diffs)
    mean = statistics.fmean(diffs)
    sd = statistics.stdev(diffs)
    t = mean / (sd / math.sqrt(n))
    return two_sided_p(t, n - 1)


class TestPairedSignificance:
    def test_hand_worked_example(self):
        a = [0.80, 0.85, 0.90, 0.75, 0.88]
        b = [0.70, 0.78, 0.80, 0.72, 0.79]
        result = paired_significance(a, b)
        assert not result.degenerate
        assert result.p_value == pytest.approx(oracle_paired_p(a, b), abs=1e-9)

    def test_symmetry(self):
        a = [0.5, 0.7, 0.6, 0.9]
        b = [0.4, 0.8, 0.55, 0.85]
        assert paired_significance(a, b).p_value == pytest.approx(
            paired_significance(b, a).p_value, abs=1e-12
        )

    def test_identical_vectors_degenerate_one(self):
        result = paired_significance([0.5, 0.6, 0.7], [0.5, 0.6, 0.7])
        assert result.degenerate
        assert result.p_value == 1.0

    def test_constant_shift_degenerate_zero(self):
        # diffs of exactly 0.25 everywhere (representable in binary)
        result = paired_significance([0.5, 0.75, 1.0], [0.25, 0.5, 0.75])
        assert result.degenerate
        assert result.p_value == 0.0

    def test_random_sweep_against_oracle(self):
        rng = random.Random(88)
        done = 0
        while done < 150:
            a = [rng.uniform(0.0, 1.0) for _ in range(5)]
            b = [rng.uniform(0.0, 1.0) for _ in range(5)]
            diffs = [x - y for x, y in zip(a, b)]
            if all(d == diffs[0] for d in diffs):
                continue
            result = paired_significance(a, b)
            assert abs(result.p_value - oracle_paired_p(a, b)) < 1e-6
            done += 1

    def test_validation(self):
        with pytest.raises(ValueError):
            paired_significance([0.5], [0.5])
        with pytest.raises(ValueError):
            paired_significance([0.5, 0.6], [0.5])
