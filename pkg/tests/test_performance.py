# -*- coding: utf-8 -*-
"""性能监控测试"""

import pytest

from core.performance import MetricCollector, PerformanceMonitor, timed


def test_collector_stats():
    collector = MetricCollector("sample")
    for duration in (0.1, 0.2, 0.3):
        collector.record(duration)
    collector.record(0.4, success=False)
    stats = collector.get_stats()
    assert stats["count"] == 4
    assert stats["success_rate"] == 0.75
    assert stats["min_duration"] == 0.1 and stats["max_duration"] == 0.4
    assert stats["total_duration"] == pytest.approx(1.0)
    assert collector.get_stats(last_n=2)["count"] == 2
    collector.clear()
    assert collector.get_stats()["count"] == 0


def test_measure_marks_failures():
    collector = MetricCollector("sample")
    with pytest.raises(ValueError):
        with collector.measure():
            raise ValueError("boom")
    assert collector.get_stats()["success_rate"] == 0.0


def test_monitor_is_shared():
    monitor = PerformanceMonitor()
    assert monitor is PerformanceMonitor()
    assert "solve" in monitor.get_all_stats()


def test_timed_decorator_and_report():
    monitor = PerformanceMonitor()
    before = monitor.get_collector("sample_fn").get_stats()["total_count"]

    @timed("sample_fn")
    def work():
        return 5

    assert work() == 5
    assert monitor.get_collector("sample_fn").get_stats()["total_count"] == before + 1
    assert "【sample_fn】" in monitor.export_report()
