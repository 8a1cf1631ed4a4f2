# -*- coding: utf-8 -*-
"""
阶数选择模块 - 为最小包围球中心选择维度 k*

四种规则共用一次 k=1..K 的扫描结果（K = max_i p_i）：
- proposed: argmin c_obj(k) + c_pen(k)，k=0 行固定为 (0, 1, 1)
- hybrid:   以 λ*(k) 加权的特征值 MSE，argmin Ẽ(k)
- mse:      均匀权重平均投影矩阵中大于 0.5 的特征值个数
- svd_elbow: 拼接矩阵奇异值碎石图的两段直线拟合（L 方法）

所有 argmin 在 1e-12 容差内取较小的 k。
"""

import logging
from dataclasses import asdict, dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import linalg as sla

from core.exceptions import FullSpace, GmebError, TooFewValues
from core.grassmann import SubspaceCollection, orthogonal_complement, weighted_projector
from core.solver import SolverConfig, SolverResult, primal_cost, warm_start_sweep

logger = logging.getLogger(__name__)

TIE_TOL = 1e-12
MSE_THRESHOLD = 0.5

RULES = ("proposed", "hybrid", "mse", "svd_elbow")


@dataclass
class OrderRow:
    """单个 k 的各项代价"""
    k: int
    c_obj: float
    c_pen: float
    total: float
    e_mse: float
    e_hybrid: float
    lambda_used: Optional[List[float]] = None


@dataclass
class OrderReport:
    """阶数选择报告"""
    rows: List[OrderRow] = field(default_factory=list)
    k_proposed: Optional[int] = None
    k_hybrid: Optional[int] = None
    k_mse: Optional[int] = None
    k_svd_elbow: Optional[int] = None

    @property
    def k_range(self) -> List[int]:
        return [row.k for row in self.rows]

    def selections(self) -> Dict[str, Optional[int]]:
        return {
            "proposed": self.k_proposed,
            "hybrid": self.k_hybrid,
            "mse": self.k_mse,
            "svd_elbow": self.k_svd_elbow,
        }

    def totals(self) -> List[float]:
        return [row.total for row in self.rows]

    def to_dict(self) -> dict:
        return {
            "rows": [asdict(row) for row in self.rows],
            "selections": self.selections(),
        }


def _argmin_first(values: Sequence[float], tol: float = TIE_TOL) -> int:
    """最小值下标，容差内并列时取第一个；NaN 视为不可选"""
    arr = np.asarray(values, dtype=float)
    finite = np.isfinite(arr)
    if not finite.any():
        raise GmebError("没有可比较的有限代价")
    best = np.min(arr[finite])
    return int(np.flatnonzero(finite & (arr <= best + tol))[0])


# ---------------------------------------------------------------- proposed

def c_obj(result: SolverResult, collection: SubspaceCollection) -> float:
    """按维度归一化的最大距离 max_i d_i(U*(k)) / k"""
    value = primal_cost(result.center, collection) / result.k
    return float(np.clip(value, 0.0, 1.0))


def c_pen(result: SolverResult, collection: SubspaceCollection) -> float:
    """正交补 U⊥ 与各样本的最小相似度

    c_pen = min_j ‖U⊥ᵀX_j‖_F² / min{n−k, p_j}，
    即 1 − d(U⊥, X_j)/p̃_j，d 取前 p̃_j 个主角的 sin² 之和。

    Raises:
        FullSpace: k == n
    """
    complement = orthogonal_complement(result.center)
    terms = []
    for x in collection:
        p_tilde = min(complement.p, x.p)
        terms.append(float(np.sum((complement.columns.T @ x.columns) ** 2)) / p_tilde)
    return float(np.clip(min(terms), 0.0, 1.0))


def select_order_proposed(collection: SubspaceCollection, config: Optional[SolverConfig] = None,
                          sweep: Optional[List[SolverResult]] = None,
                          warm_start: bool = True) -> Tuple[int, OrderReport]:
    """argmin_k c_obj(k) + c_pen(k)，k = 0..K"""
    report = build_report(collection, config, sweep, warm_start)
    return report.k_proposed, report


# ---------------------------------------------------------------- MSE

def _descending_eigenvalues(matrix: np.ndarray) -> np.ndarray:
    return np.clip(sla.eigvalsh(0.5 * (matrix + matrix.T))[::-1], 0.0, None)


def _eigen_mse(evals: np.ndarray, k: int) -> float:
    """Σ_{r<=k}(1−d_r) + Σ_{r>k} d_r，R = n"""
    return float(np.sum(1.0 - evals[:k]) + np.sum(evals[k:]))


def uniform_eigenvalues(collection: SubspaceCollection) -> np.ndarray:
    """(1/M)Σ X_i X_iᵀ 的降序特征值"""
    m = len(collection)
    return _descending_eigenvalues(weighted_projector(collection, np.full(m, 1.0 / m)))


def mse_values(collection: SubspaceCollection, k_max: Optional[int] = None) -> np.ndarray:
    """E(0..k_max)，缺省 k_max = n"""
    evals = uniform_eigenvalues(collection)
    k_max = collection.n if k_max is None else k_max
    return np.array([_eigen_mse(evals, k) for k in range(k_max + 1)])


def mse_value(collection: SubspaceCollection, k: int) -> float:
    """E(k) = min_U (1/M)Σ‖UUᵀ − X_i X_iᵀ‖_F²"""
    return _eigen_mse(uniform_eigenvalues(collection), k)


def select_order_mse(collection: SubspaceCollection) -> int:
    """特征值严格大于 0.5 的个数"""
    return int(np.sum(uniform_eigenvalues(collection) > MSE_THRESHOLD))


# ---------------------------------------------------------------- hybrid

def hybrid_value(result: SolverResult, collection: SubspaceCollection) -> float:
    """Ẽ(k)，特征值取自 Σ λ*_i(k) X_i X_iᵀ"""
    if result.failed:
        return float("nan")
    evals = _descending_eigenvalues(weighted_projector(collection, result.lambda_best.values))
    return _eigen_mse(evals, result.k)


def hybrid_values(sweep: Sequence[SolverResult], collection: SubspaceCollection) -> np.ndarray:
    """[Ẽ(0), Ẽ(1), …]，k=0 使用均匀权重，失败的 k 记为 NaN"""
    values = [_eigen_mse(uniform_eigenvalues(collection), 0)]
    values.extend(hybrid_value(r, collection) for r in sorted(sweep, key=lambda r: r.k))
    return np.array(values)


def select_order_hybrid(sweep: Sequence[SolverResult], collection: SubspaceCollection) -> int:
    """argmin_k Ẽ(k)"""
    return _argmin_first(hybrid_values(sweep, collection))


# ---------------------------------------------------------------- SVD elbow

def _line_rmse(x: np.ndarray, y: np.ndarray) -> float:
    if x.size <= 2:
        return 0.0
    coeffs = np.polyfit(x, y, 1)
    residual = y - np.polyval(coeffs, x)
    return float(np.sqrt(np.mean(residual ** 2)))


def scree_elbow(values: Sequence[float]) -> int:
    """碎石图拐点：对每个分割 c = 2..R−1 分别拟合左右两段直线，
    取按长度加权的 RMSE 最小的 c

    Raises:
        TooFewValues: R < 4
    """
    y = np.asarray(values, dtype=float)
    total = y.size
    if total < 4:
        raise TooFewValues(f"至少需要 4 个奇异值，当前 {total} 个")
    x = np.arange(1, total + 1, dtype=float)
    errors = []
    for c in range(2, total):
        left = _line_rmse(x[:c], y[:c])
        right = _line_rmse(x[c:], y[c:])
        errors.append(c / total * left + (total - c) / total * right)
    return 2 + _argmin_first(errors)


def scree(collection: SubspaceCollection) -> np.ndarray:
    """[X_1 … X_M] 的奇异值（降序）"""
    return sla.svdvals(collection.stacked())


def select_order_svd_elbow(collection: SubspaceCollection) -> int:
    return scree_elbow(scree(collection))


# ---------------------------------------------------------------- 汇总

def build_report(collection: SubspaceCollection, config: Optional[SolverConfig] = None,
                 sweep: Optional[List[SolverResult]] = None,
                 warm_start: bool = True) -> OrderReport:
    """一次扫描计算四种规则

    k 的上限为 min(max_i p_i, n−1)，k = n 时正交补为空，c_pen 无定义。
    """
    k_top = min(collection.max_dim, collection.n - 1)
    if k_top < collection.max_dim:
        logger.warning("存在 p_i = n 的样本，k 的扫描上限截为 n−1=%d", k_top)
    if sweep is None:
        sweep = warm_start_sweep(collection, k_top, config, warm_start=warm_start) if k_top >= 1 else []
    sweep = sorted((r for r in sweep if r.k <= k_top), key=lambda r: r.k)

    e_mse = mse_values(collection, k_top)
    m = len(collection)
    e_zero = _eigen_mse(uniform_eigenvalues(collection), 0)
    rows = [OrderRow(0, 0.0, 1.0, 1.0, float(e_mse[0]), e_zero, [1.0 / m] * m)]
    for result in sweep:
        if result.failed:
            nan = float("nan")
            rows.append(OrderRow(result.k, nan, nan, nan, float(e_mse[result.k]), nan))
            logger.warning("k=%d 求解失败，不参与阶数选择", result.k)
            continue
        try:
            obj = c_obj(result, collection)
            pen = c_pen(result, collection)
        except FullSpace:
            obj = pen = float("nan")
        rows.append(OrderRow(result.k, obj, pen, obj + pen, float(e_mse[result.k]),
                             hybrid_value(result, collection), result.lambda_best.tolist()))

    report = OrderReport(rows=rows)
    report.k_proposed = rows[_argmin_first([row.total for row in rows])].k
    report.k_hybrid = rows[_argmin_first([row.e_hybrid for row in rows])].k
    report.k_mse = select_order_mse(collection)
    try:
        report.k_svd_elbow = select_order_svd_elbow(collection)
    except TooFewValues as e:
        logger.warning("SVD 拐点法不可用: %s", e)
    logger.info("阶数选择: %s", report.selections())
    return report
