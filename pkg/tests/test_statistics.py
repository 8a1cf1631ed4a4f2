# -*- coding: utf-8 -*-
"""试验统计测试"""

import math

import pytest

from core.statistics import accuracy, distribution, envelope, mean_order, order_summary, win_fraction


class TestEnvelope:
    def test_pads_short_runs_with_last_value(self):
        rows = envelope([[3.0, 2.0, 1.0], [4.0, 0.5]])
        assert [r.t for r in rows] == [0, 1, 2]
        assert rows[2].minimum == 0.5
        assert rows[2].maximum == 1.0
        assert rows[0].median == pytest.approx(3.5)

    def test_median_time(self):
        rows = envelope([[1.0, 0.5], [1.0, 0.25]], times=[[0.0, 0.1], [0.0, 0.3]])
        assert rows[1].median_time == pytest.approx(0.2)

    def test_empty(self):
        assert envelope([]) == []
        assert envelope([[]]) == []


class TestDistribution:
    def test_summary(self):
        d = distribution([1.0, 2.0, 3.0, 4.0, 5.0])
        assert (d.count, d.mean, d.median, d.minimum, d.maximum) == (5, 3.0, 3.0, 1.0, 5.0)
        assert d.q1 == 2.0 and d.q3 == 4.0
        assert d.to_dict()["count"] == 5

    def test_empty_is_nan(self):
        d = distribution([])
        assert d.count == 0 and math.isnan(d.mean)


class TestSelections:
    def test_accuracy_counts_missing_as_wrong(self):
        assert accuracy([2, 2, None, 3], 2) == 0.5
        assert math.isnan(accuracy([], 2))

    def test_mean_order_skips_missing(self):
        assert mean_order([1, None, 3]) == 2.0
        assert math.isnan(mean_order([None]))

    def test_win_fraction_is_strict(self):
        assert win_fraction([10, 10, 10, 10], [5, 10, 12, 9]) == 0.5
        assert math.isnan(win_fraction([], []))

    def test_order_summary(self):
        summary = order_summary({"proposed": [2, 2], "mse": [1, 3]}, 2)
        assert summary["proposed"] == {"accuracy": 1.0, "mean_order": 2.0}
        assert summary["mse"]["accuracy"] == 0.0
