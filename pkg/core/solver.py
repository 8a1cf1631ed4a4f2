# -*- coding: utf-8 -*-
"""
GMEB 对偶次梯度求解器

在 Gr(k,n) 上求一组（维度可不同的）子空间的最小包围球中心。

符号约定：
- d_i(U) = 点到集合距离，primal_cost = max_i d_i(U)（越小越好）
- 对偶代价 f(λ) = −Σ λ_i d_i(U_λ)，U_λ 为 Σλ_i X_i X_iᵀ 的主 k 维特征子空间
- 次梯度 g = −d(U_λ)，对偶间隙 = max_i d_i − Σ λ_i d_i >= 0，等于 0 时为全局最优

迭代：λ ← Π(λ − α_t g)，α_t = a/√t。对偶代价下降时 a ← βa；上升时回溯（a 逐次减半），
回溯成功后 a ← βa，回溯步长小于 ζ·α_t 时放弃回溯，迭代点不动、a 恢复。
对偶代价与最小间隙在 history_window 次迭代内都没有下降超过 η 时判为停滞。
全程记录对偶代价最低的 λ_best 并作为结果返回。
"""

import math
import time
import logging
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import InitVar, asdict, dataclass, field
from enum import Enum
from typing import List, Optional, Sequence, Tuple

import numpy as np

from core.exceptions import (
    DegenerateEigengapWarning,
    DimensionMismatch,
    GmebError,
    InvalidConfig,
    NonFiniteCost,
    ZeroVector,
)
from core.grassmann import (
    Basis,
    SubspaceCollection,
    dominant_eigenspace,
    extrinsic_mean,
    p2s_distance,
)
from core.performance import PerformanceMonitor, timed
from core.validators import SolverConfigValidator, Validators

logger = logging.getLogger(__name__)

SIMPLEX_TOL = 1e-12
SUPPORT_TOL = 1e-9
STEP_SCALE_CAP = 1e8


class ConvergedReason(str, Enum):
    """停止原因"""
    GAP_BELOW_ETA = "GapBelowEta"
    STALLED = "Stalled"
    MAX_ITER = "MaxIter"
    FAILED = "Failed"  # 仅出现在扫描结果中


@dataclass(frozen=True)
class SolverConfig:
    """求解器参数

    Attributes:
        a: 初始步长尺度
        eta: 停止阈值（对偶间隙与停滞判定共用）
        zeta: 回溯步长下限比
        beta: 回溯成功后的步长增长系数
        max_iter: 最大迭代次数
        history_window: 停滞判定窗口
        step_mode: backtracking（回溯）或 diminishing（纯 a/√t）
        projection: euclidean（单纯形欧氏投影）或 normalize（截断后 ℓ1 归一化）
    """
    a: float = 1.0
    eta: float = 1e-9
    zeta: float = 1e-6
    beta: float = 1.5
    max_iter: int = 5000
    history_window: int = 10
    step_mode: str = "backtracking"
    projection: str = "euclidean"

    def __post_init__(self):
        ok, cleaned, errors = SolverConfigValidator.validate(asdict(self))
        if not ok:
            raise InvalidConfig("求解器参数无效: " + "; ".join(errors), errors)
        for key, value in cleaned.items():
            object.__setattr__(self, key, value)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True, eq=False)
class DualWeights:
    """单位单纯形上的对偶权重 λ"""

    values: np.ndarray
    check: InitVar[bool] = True

    def __post_init__(self, check: bool):
        w = np.array(self.values, dtype=float, copy=True).reshape(-1)
        if check:
            result = Validators.validate_simplex(w, tol=SIMPLEX_TOL)
            if not result.valid:
                raise InvalidConfig(f"对偶权重不可行: {result.error}")
        w.setflags(write=False)
        object.__setattr__(self, "values", w)

    @classmethod
    def uniform(cls, size: int) -> "DualWeights":
        return cls(np.full(size, 1.0 / size))

    def __array__(self, dtype=None, copy=None):
        return self.values if dtype is None else self.values.astype(dtype)

    def __len__(self) -> int:
        return self.values.size

    def __getitem__(self, idx):
        return self.values[idx]

    def tolist(self) -> List[float]:
        return self.values.tolist()

    def __repr__(self) -> str:
        return f"DualWeights(M={len(self)})"


@dataclass
class TraceEntry:
    """单次迭代记录"""
    t: int
    primal: float        # 当前迭代点的最大距离
    dual: float          # 当前迭代点的对偶代价
    step: float          # 实际采用的步长，t=0 时为 0
    gap: float
    best_primal: float   # 至今最小的最大距离
    best_dual: float     # 至今最低的对偶代价
    time: float          # 累计耗时（秒）

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class SolverResult:
    """求解结果，全部数值对应 λ_best 及其中心"""
    k: int
    lambda_best: Optional[DualWeights]
    center: Optional[Basis]
    primal_cost: float
    dual_cost: float
    duality_gap: float
    iterations: int
    converged_reason: ConvergedReason
    trace: List[TraceEntry] = field(default_factory=list)
    best_center_trace: Optional[List[Basis]] = None
    error: str = ""

    @classmethod
    def failure(cls, k: int, message: str) -> "SolverResult":
        """扫描中某个 k 失败时的占位结果"""
        nan = float("nan")
        return cls(k=k, lambda_best=None, center=None, primal_cost=nan, dual_cost=nan,
                   duality_gap=nan, iterations=0, converged_reason=ConvergedReason.FAILED,
                   error=message)

    @property
    def failed(self) -> bool:
        return self.converged_reason is ConvergedReason.FAILED

    def support(self, tol: float = SUPPORT_TOL) -> List[int]:
        """权重大于 tol 的样本下标"""
        if self.lambda_best is None:
            return []
        return [int(i) for i in np.flatnonzero(self.lambda_best.values > tol)]

    def to_dict(self) -> dict:
        data = {
            "k": self.k,
            "lambda": self.lambda_best.tolist() if self.lambda_best is not None else None,
            "center": None,
            "primal_cost": self.primal_cost,
            "dual_cost": self.dual_cost,
            "duality_gap": self.duality_gap,
            "iterations": self.iterations,
            "converged_reason": self.converged_reason.value,
            "trace": [entry.to_dict() for entry in self.trace],
        }
        if self.center is not None:
            data["center"] = {
                "n": self.center.n,
                "k": self.center.p,
                "rows": self.center.columns.tolist(),
            }
        if self.error:
            data["error"] = self.error
        return data


# ---------------------------------------------------------------- 基本运算

def _check_order(collection: SubspaceCollection, k: int) -> None:
    if isinstance(k, bool) or not isinstance(k, (int, np.integer)):
        raise InvalidConfig(f"中心维度 k 必须是整数，当前为 {k!r}")
    if not 1 <= k <= collection.n:
        raise InvalidConfig(f"要求 1 <= k <= n={collection.n}，当前 k={k}")


def _as_weights(weights, size: int) -> np.ndarray:
    w = np.asarray(weights, dtype=float).reshape(-1)
    if w.size != size:
        raise InvalidConfig(f"对偶权重长度应为 {size}，当前为 {w.size}")
    return w


def distances(center: Basis, collection: SubspaceCollection) -> np.ndarray:
    """d_i(U) 向量"""
    return np.array([p2s_distance(center, x) for x in collection])


def dual_cost(weights, collection: SubspaceCollection, k: int) -> Tuple[float, Basis]:
    """对偶代价 f(λ) = −Σλ_i min{k,p_i} + Tr(U_λᵀ(Σλ_i X_i X_iᵀ)U_λ)

    Returns:
        (f(λ), U_λ)
    """
    _check_order(collection, k)
    w = _as_weights(weights, len(collection))
    center = extrinsic_mean(collection, k, w)
    return float(-np.dot(w, distances(center, collection))), center


def subgradient(center: Basis, collection: SubspaceCollection, k: int) -> np.ndarray:
    """g_i = −d_i(U_λ)，各分量在 [−min(k,p_i), 0] 内"""
    if center.p != k:
        raise DimensionMismatch(f"中心维度 {center.p} 与 k={k} 不一致")
    return -distances(center, collection)


def primal_cost(center: Basis, collection: SubspaceCollection) -> float:
    """max_i d_i(U)"""
    return float(np.max(distances(center, collection)))


def simplex_normalize(v: Sequence[float]) -> DualWeights:
    """负分量截断为 0 后按 ℓ1 范数归一化

    Raises:
        ZeroVector: 所有分量 <= 0
    """
    w = np.maximum(np.asarray(v, dtype=float).reshape(-1), 0.0)
    total = w.sum()
    if not np.isfinite(total) or total <= 0:
        raise ZeroVector("向量没有正分量，无法归一化到单纯形")
    return DualWeights(w / total, check=False)


def simplex_project(v: Sequence[float]) -> DualWeights:
    """到单位单纯形的欧氏投影 argmin ‖x − v‖₂，x >= 0，Σx = 1"""
    c = np.asarray(v, dtype=float).reshape(-1)
    if not np.all(np.isfinite(c)):
        raise NonFiniteCost("投影输入包含非有限值")
    u = np.sort(c)[::-1]
    thresholds = (np.cumsum(u) - 1.0) / np.arange(1, c.size + 1)
    rho = int(np.flatnonzero(u > thresholds)[-1])
    w = np.maximum(c - thresholds[rho], 0.0)
    # 抵消累加舍入
    return DualWeights(w / w.sum(), check=False)


def support_init(collection: SubspaceCollection, center: Basis,
                 tol: float = SUPPORT_TOL) -> DualWeights:
    """以给定中心的支撑集构造初始对偶权重

    支撑集 I = {i : d_i(U) >= max_j d_j(U) − tol}，λ_i = 1/|I|（i ∈ I），其余为 0。
    """
    d = distances(center, collection)
    mask = d >= d.max() - tol
    return DualWeights(mask / mask.sum())


# ---------------------------------------------------------------- 迭代

@dataclass
class _Iterate:
    weights: np.ndarray
    center: Basis
    d: np.ndarray
    dual: float
    primal: float
    degenerate: bool

    @property
    def gap(self) -> float:
        return self.primal + self.dual


class _DualProblem:
    """固定 (collection, k) 的对偶问题，预先拼接全部基矩阵"""

    def __init__(self, collection: SubspaceCollection, k: int):
        self.k = k
        self.z = collection.stacked()
        dims = np.array(collection.dims)
        self.offsets = np.concatenate([[0], np.cumsum(dims)[:-1]])
        self.repeats = dims
        self.mins = np.minimum(dims, k).astype(float)
        self._eig = PerformanceMonitor().get_collector("eigensolve")

    def evaluate(self, weights: np.ndarray) -> _Iterate:
        scaled = self.z * np.sqrt(np.repeat(weights, self.repeats))
        with self._eig.measure():
            center, _, degenerate = dominant_eigenspace(scaled @ scaled.T, self.k)
        overlap = np.add.reduceat(np.sum((center.columns.T @ self.z) ** 2, axis=0), self.offsets)
        d = np.clip(self.mins - overlap, 0.0, self.mins)
        dual = float(-np.dot(weights, d))
        primal = float(np.max(d))
        if not (math.isfinite(dual) and math.isfinite(primal)):
            raise NonFiniteCost(f"代价非有限: dual={dual}, primal={primal}")
        return _Iterate(weights, center, d, dual, primal, degenerate)


def _initial_weights(init_lambda, size: int) -> np.ndarray:
    if init_lambda is None:
        return np.full(size, 1.0 / size)
    w = _as_weights(init_lambda, size)
    if not np.all(np.isfinite(w)) or np.any(w < 0):
        raise InvalidConfig("初始对偶权重必须是非负有限值")
    return simplex_normalize(w).values


def _backtrack(problem: _DualProblem, project, previous: _Iterate, a: float, t: int,
               config: SolverConfig) -> Tuple[_Iterate, float, float]:
    """全步长使对偶代价上升时的回溯

    a 逐次减半，找到不上升的步长后 a ← βa；试探步长降到 ζ·α_t 以下时放弃，
    迭代点留在原处、a 恢复原值。

    Returns:
        (迭代点, 采用的步长, 新的 a)
    """
    floor = config.zeta * a / math.sqrt(t)
    trial_a = a
    while True:
        trial_a /= 2.0
        trial_step = trial_a / math.sqrt(t)
        if trial_step <= floor:
            return previous, 0.0, a
        trial = problem.evaluate(project(previous.weights + trial_step * previous.d).values)
        if trial.dual <= previous.dual:
            return trial, trial_step, trial_a * config.beta


def _stalled(duals: List[float], gaps: List[float], window: int, eta: float) -> bool:
    """最近 window 次迭代里对偶代价与最小间隙都没有下降超过 eta"""
    dual_drop = max(duals[-window - 1:-1]) - duals[-1]
    gap_drop = gaps[-window - 1] - gaps[-1]
    return dual_drop <= eta and gap_drop <= eta


@timed("solve")
def solve(collection: SubspaceCollection, k: int, config: Optional[SolverConfig] = None,
          init_lambda=None, keep_centers: bool = False) -> SolverResult:
    """在 Gr(k,n) 上求最小包围球中心

    Args:
        collection: 子空间集合
        k: 中心维度，1 <= k <= n
        config: 求解器参数，缺省为 SolverConfig()
        init_lambda: 初始对偶权重，缺省为均匀权重（即外蕴均值初始化）
        keep_centers: 是否逐次记录当前最低最大距离迭代点的中心

    Raises:
        InvalidConfig: k 或初始权重无效
        NonFiniteCost: 迭代中出现非有限代价
    """
    config = config or SolverConfig()
    _check_order(collection, k)
    problem = _DualProblem(collection, k)
    project = simplex_project if config.projection == "euclidean" else simplex_normalize
    backtracking = config.step_mode == "backtracking"

    start = time.perf_counter()
    state = problem.evaluate(_initial_weights(init_lambda, len(collection)))
    best = state
    best_primal = state
    duals = [state.dual]
    gaps = [state.gap]
    trace = [TraceEntry(0, state.primal, state.dual, 0.0, state.gap,
                        state.primal, state.dual, time.perf_counter() - start)]
    centers = [state.center] if keep_centers else None

    a = config.a
    window = config.history_window
    t = 0
    while True:
        if state.gap <= config.eta:
            reason = ConvergedReason.GAP_BELOW_ETA
            break
        if t >= window and _stalled(duals, gaps, window, config.eta):
            reason = ConvergedReason.STALLED
            break
        if t >= config.max_iter:
            reason = ConvergedReason.MAX_ITER
            break

        t += 1
        step = a / math.sqrt(t)
        previous = state
        state = problem.evaluate(project(previous.weights + step * previous.d).values)
        if backtracking:
            if state.dual < previous.dual:
                a = min(a * config.beta, config.a * STEP_SCALE_CAP)
            elif state.dual > previous.dual:
                state, step, a = _backtrack(problem, project, previous, a, t, config)

        if state.dual <= best.dual:
            best = state
        if state.primal < best_primal.primal:
            best_primal = state
        duals.append(state.dual)
        gaps.append(min(gaps[-1], state.gap))
        trace.append(TraceEntry(t, state.primal, state.dual, step, state.gap,
                                best_primal.primal, best.dual, time.perf_counter() - start))
        if keep_centers:
            centers.append(best_primal.center)
        logger.debug("k=%d t=%d primal=%.12g dual=%.12g gap=%.3e step=%.3e",
                     k, t, state.primal, state.dual, state.gap, step)

    if best.degenerate:
        warnings.warn(f"k={k} 时最优权重对应的第 k/k+1 个特征值相等，中心不唯一",
                      DegenerateEigengapWarning, stacklevel=3)
    logger.info("求解完成 k=%d: primal=%.10g gap=%.3e 迭代=%d 原因=%s",
                k, best.primal, best.gap, t, reason.value)
    return SolverResult(
        k=k,
        lambda_best=DualWeights(best.weights, check=False),
        center=best.center,
        primal_cost=best.primal,
        dual_cost=best.dual,
        duality_gap=best.gap,
        iterations=t,
        converged_reason=reason,
        trace=trace,
        best_center_trace=centers,
    )


def _solve_or_fail(collection: SubspaceCollection, k: int, config: SolverConfig,
                   init_lambda=None) -> SolverResult:
    try:
        return solve(collection, k, config, init_lambda)
    except GmebError as e:
        logger.error("k=%d 求解失败: %s", k, e)
        return SolverResult.failure(k, str(e))


@timed("sweep")
def warm_start_sweep(collection: SubspaceCollection, k_max: int,
                     config: Optional[SolverConfig] = None, warm_start: bool = True,
                     threads: Optional[int] = None) -> List[SolverResult]:
    """对 k = 1..k_max 依次求解

    warm_start=True 时 k 的初值为 k−1 的 λ_best（k=1 及前一个 k 失败时用均匀权重），
    顺序执行；warm_start=False 时各 k 均从均匀权重出发，在线程池中并行求解。
    单个 k 失败不影响其他 k，对应位置为 converged_reason=Failed 的占位结果。
    """
    config = config or SolverConfig()
    upper = min(collection.max_dim, collection.n)
    if isinstance(k_max, bool) or not 1 <= int(k_max) <= upper:
        raise InvalidConfig(f"k_max 必须在 [1, {upper}] 内，当前为 {k_max}")
    orders = range(1, int(k_max) + 1)

    if not warm_start:
        if threads is None:
            from core.config import Config
            threads = Config().threads()
        with ThreadPoolExecutor(max_workers=max(1, min(threads, len(orders)))) as pool:
            return list(pool.map(lambda k: _solve_or_fail(collection, k, config), orders))

    results: List[SolverResult] = []
    init = None
    for k in orders:
        result = _solve_or_fail(collection, k, config, init)
        init = None if result.failed else result.lambda_best
        results.append(result)
    return results
