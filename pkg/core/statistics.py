# -*- coding: utf-8 -*-
"""
试验统计模块
对多次 Monte Carlo 试验的记录做汇总：逐迭代包络、分布、选择准确率
"""

import logging
from dataclasses import asdict, dataclass
from typing import Dict, List, Optional, Sequence

import numpy as np

logger = logging.getLogger(__name__)


@dataclass
class EnvelopeRow:
    """某个迭代下标处各试验的中位数与极值"""
    t: int
    median: float
    minimum: float
    maximum: float
    median_time: float = 0.0


@dataclass
class Distribution:
    """一组数的分布摘要"""
    count: int
    mean: float
    median: float
    minimum: float
    maximum: float
    q1: float
    q3: float

    def to_dict(self) -> dict:
        return asdict(self)


def _pad(series: Sequence[Sequence[float]]) -> np.ndarray:
    """不等长序列补齐到最长，提前停止的试验沿用最后一个值"""
    length = max(len(s) for s in series)
    out = np.empty((len(series), length))
    for row, values in enumerate(series):
        out[row, :len(values)] = values
        out[row, len(values):] = values[-1]
    return out


def envelope(series: Sequence[Sequence[float]],
             times: Optional[Sequence[Sequence[float]]] = None) -> List[EnvelopeRow]:
    """逐迭代的中位数、最小值、最大值

    Args:
        series: 每次试验一条序列（如到真值的距离）
        times: 与 series 对齐的累计耗时，给出时同时汇总中位耗时
    """
    series = [list(s) for s in series if len(s) > 0]
    if not series:
        return []
    values = _pad(series)
    median_time = np.median(_pad([list(t) for t in times]), axis=0) if times else None
    rows = []
    for t in range(values.shape[1]):
        column = values[:, t]
        rows.append(EnvelopeRow(
            t=t,
            median=float(np.median(column)),
            minimum=float(np.min(column)),
            maximum=float(np.max(column)),
            median_time=float(median_time[t]) if median_time is not None else 0.0,
        ))
    return rows


def distribution(values: Sequence[float]) -> Distribution:
    arr = np.asarray(values, dtype=float)
    if arr.size == 0:
        nan = float("nan")
        return Distribution(0, nan, nan, nan, nan, nan, nan)
    q1, median, q3 = np.percentile(arr, [25, 50, 75])
    return Distribution(int(arr.size), float(arr.mean()), float(median), float(arr.min()),
                        float(arr.max()), float(q1), float(q3))


def accuracy(selected: Sequence[Optional[int]], truth: int) -> float:
    """选中真值阶数的比例，未给出选择（None）的试验计为错误"""
    if not selected:
        return float("nan")
    return sum(1 for k in selected if k == truth) / len(selected)


def mean_order(selected: Sequence[Optional[int]]) -> float:
    """有效选择的平均阶数"""
    valid = [k for k in selected if k is not None]
    return float(np.mean(valid)) if valid else float("nan")


def win_fraction(naive: Sequence[int], warm: Sequence[int]) -> float:
    """热启动迭代次数严格少于朴素初始化的比例"""
    pairs = list(zip(naive, warm))
    if not pairs:
        return float("nan")
    return sum(1 for a, b in pairs if b < a) / len(pairs)


def order_summary(selections: Dict[str, List[Optional[int]]], truth: int) -> Dict[str, dict]:
    """每种规则的准确率与平均阶数"""
    return {
        rule: {"accuracy": accuracy(picks, truth), "mean_order": mean_order(picks)}
        for rule, picks in selections.items()
    }
