import math

import numpy as np
import pytest

from tirgp.metrics import bootstrap_median_ci, mae, mse, r2_score


class TestScores:
    def test_perfect_prediction(self):
        y = np.array([1.0, 2.0, 3.0])
        assert r2_score(y, y) == 1.0
        assert mse(y, y) == 0.0
        assert mae(y, y) == 0.0

    def test_mean_prediction_r2_zero(self):
        y = np.array([1.0, 2.0, 3.0])
        pred = np.full(3, y.mean())
        assert r2_score(y, pred) == 0.0

    def test_constant_target_undefined(self):
        y = np.ones(5)
        assert math.isnan(r2_score(y, y))

    def test_non_finite_prediction_undefined(self):
        y = np.array([1.0, 2.0, 3.0])
        assert math.isnan(r2_score(y, np.array([1.0, math.nan, 3.0])))

    def test_known_values(self):
        y = np.array([1.0, 2.0, 3.0, 4.0])
        pred = np.array([1.5, 2.5, 2.5, 3.5])
        # residuals are +-0.5 everywhere; ss_tot = 5.0
        assert mse(y, pred) == pytest.approx(0.25)
        assert mae(y, pred) == pytest.approx(0.5)
        assert r2_score(y, pred) == pytest.approx(1.0 - 1.0 / 5.0)


class TestBootstrap:
    def test_identical_values_zero_width(self):
        med, lo, hi = bootstrap_median_ci([0.7] * 12)
        assert med == lo == hi == 0.7

    def test_median_within_data_range(self, rng):
        for _ in range(20):
            vals = rng.normal(size=int(rng.integers(3, 30)))
            med, lo, hi = bootstrap_median_ci(vals, seed=int(rng.integers(1000)))
            assert vals.min() <= lo <= med <= hi <= vals.max()

    def test_deterministic_for_fixed_seed(self):
        vals = [1.0, 2.0, 3.0, 4.0, 5.0]
        a = bootstrap_median_ci(vals, seed=42)
        b = bootstrap_median_ci(vals, seed=42)
        assert a == b

    def test_empty_input(self):
        med, lo, hi = bootstrap_median_ci([])
        assert math.isnan(med) and math.isnan(lo) and math.isnan(hi)
