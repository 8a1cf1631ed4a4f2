# -*- coding: utf-8 -*-
"""
数据验证模块 - 参数验证和数据清理

- 求解器参数、数据集规格、试验配置的验证器
- 单纯形权重、正交基矩阵的数值检查
- 每个记录验证器返回 (是否有效, 清理后的数据, 错误列表)
"""

import math
import logging
from dataclasses import dataclass
from typing import Any, List, Optional, Sequence, Tuple

import numpy as np

logger = logging.getLogger(__name__)


@dataclass
class ValidationResult:
    """验证结果"""
    valid: bool
    value: Any  # 清理后的值
    error: str = ""  # 错误信息


class Validators:
    """验证器集合"""

    SIMPLEX_TOL = 1e-12
    ORTHONORMAL_TOL = 1e-10

    @staticmethod
    def validate_positive(value: Any, field_name: str) -> ValidationResult:
        """严格正实数"""
        try:
            x = float(value)
        except (ValueError, TypeError):
            return ValidationResult(False, None, f"{field_name}必须是有效数字")
        if not math.isfinite(x) or x <= 0:
            return ValidationResult(False, None, f"{field_name}必须为正数，当前为 {value}")
        return ValidationResult(True, x)

    @staticmethod
    def validate_open_unit(value: Any, field_name: str) -> ValidationResult:
        """开区间 (0, 1) 内的实数"""
        result = Validators.validate_positive(value, field_name)
        if not result.valid:
            return result
        if result.value >= 1:
            return ValidationResult(False, None, f"{field_name}必须小于 1，当前为 {value}")
        return result

    @staticmethod
    def validate_at_least(value: Any, lower: float, field_name: str) -> ValidationResult:
        """不小于下界的实数"""
        try:
            x = float(value)
        except (ValueError, TypeError):
            return ValidationResult(False, None, f"{field_name}必须是有效数字")
        if not math.isfinite(x) or x < lower:
            return ValidationResult(False, None, f"{field_name}不能小于 {lower}，当前为 {value}")
        return ValidationResult(True, x)

    @staticmethod
    def validate_int_range(value: Any, field_name: str, lower: int = 0,
                           upper: Optional[int] = None) -> ValidationResult:
        """整数范围检查"""
        if isinstance(value, bool):
            return ValidationResult(False, None, f"{field_name}必须是整数")
        try:
            x = int(value)
        except (ValueError, TypeError):
            return ValidationResult(False, None, f"{field_name}必须是整数")
        if x != value and not (isinstance(value, str) and str(x) == value.strip()):
            return ValidationResult(False, None, f"{field_name}必须是整数，当前为 {value}")
        if x < lower:
            return ValidationResult(False, None, f"{field_name}不能小于 {lower}")
        if upper is not None and x > upper:
            return ValidationResult(False, None, f"{field_name}不能大于 {upper}")
        return ValidationResult(True, x)

    @staticmethod
    def validate_choice(value: Any, choices: Sequence[str], field_name: str) -> ValidationResult:
        """枚举取值"""
        text = str(getattr(value, "value", value)).strip().lower()
        if text not in choices:
            return ValidationResult(False, None, f"{field_name}必须是 {'/'.join(choices)} 之一")
        return ValidationResult(True, text)

    @staticmethod
    def validate_simplex(weights: Any, size: Optional[int] = None,
                         tol: float = SIMPLEX_TOL) -> ValidationResult:
        """单位单纯形上的权重：非负且和为 1"""
        try:
            w = np.asarray(weights, dtype=float).reshape(-1)
        except (ValueError, TypeError):
            return ValidationResult(False, None, "权重必须是实数向量")
        if w.size == 0:
            return ValidationResult(False, None, "权重不能为空")
        if size is not None and w.size != size:
            return ValidationResult(False, None, f"权重长度应为 {size}，当前为 {w.size}")
        if not np.all(np.isfinite(w)):
            return ValidationResult(False, None, "权重包含非有限值")
        if np.any(w < 0):
            return ValidationResult(False, None, "权重不能为负")
        if abs(w.sum() - 1.0) > tol:
            return ValidationResult(False, None, f"权重之和应为 1，当前为 {w.sum():.17g}")
        return ValidationResult(True, w)

    @staticmethod
    def validate_basis_matrix(matrix: Any, tol: float = ORTHONORMAL_TOL) -> ValidationResult:
        """n×p 列正交矩阵，1 <= p <= n"""
        try:
            m = np.asarray(matrix, dtype=float)
        except (ValueError, TypeError):
            return ValidationResult(False, None, "基矩阵必须是实数矩阵")
        if m.ndim == 1:
            m = m.reshape(-1, 1)
        if m.ndim != 2:
            return ValidationResult(False, None, "基矩阵必须是二维数组")
        n, p = m.shape
        if p < 1 or p > n:
            return ValidationResult(False, None, f"要求 1 <= p <= n，当前 n={n}, p={p}")
        if not np.all(np.isfinite(m)):
            return ValidationResult(False, None, "基矩阵包含非有限值")
        residual = np.max(np.abs(m.T @ m - np.eye(p)))
        if residual > tol:
            return ValidationResult(False, None, f"列不正交: max|BᵀB−I| = {residual:.3e}")
        return ValidationResult(True, m)


def _collect(errors: List[str], cleaned: dict, key: str, result: ValidationResult) -> None:
    if result.valid:
        cleaned[key] = result.value
    else:
        errors.append(result.error)


class SolverConfigValidator:
    """求解器参数验证器"""

    STEP_MODES = ("backtracking", "diminishing")
    PROJECTIONS = ("euclidean", "normalize")

    @staticmethod
    def validate(data: dict) -> Tuple[bool, dict, List[str]]:
        """验证求解器参数

        Returns:
            (是否有效, 清理后的数据, 错误列表)
        """
        errors: List[str] = []
        cleaned: dict = {}
        _collect(errors, cleaned, "a", Validators.validate_positive(data.get("a"), "步长参数 a"))
        _collect(errors, cleaned, "eta", Validators.validate_positive(data.get("eta"), "停止阈值 eta"))
        _collect(errors, cleaned, "zeta", Validators.validate_open_unit(data.get("zeta"), "步长下限比 zeta"))
        _collect(errors, cleaned, "beta", Validators.validate_at_least(data.get("beta"), 1.0, "增长参数 beta"))
        _collect(errors, cleaned, "max_iter",
                 Validators.validate_int_range(data.get("max_iter"), "最大迭代次数", lower=1))
        _collect(errors, cleaned, "history_window",
                 Validators.validate_int_range(data.get("history_window"), "停滞窗口", lower=1))
        _collect(errors, cleaned, "step_mode",
                 Validators.validate_choice(data.get("step_mode"), SolverConfigValidator.STEP_MODES, "步长模式"))
        _collect(errors, cleaned, "projection",
                 Validators.validate_choice(data.get("projection", "euclidean"),
                                            SolverConfigValidator.PROJECTIONS, "单纯形投影方式"))
        return len(errors) == 0, cleaned, errors


class DatasetSpecValidator:
    """数据集规格验证器"""

    MODELS = ("nested_ball", "arc")
    PLACEMENTS = ("boundary", "interior")

    @staticmethod
    def validate(data: dict) -> Tuple[bool, dict, List[str]]:
        """验证数据集规格

        Returns:
            (是否有效, 清理后的数据, 错误列表)
        """
        errors: List[str] = []
        cleaned: dict = dict(data)

        _collect(errors, cleaned, "model",
                 Validators.validate_choice(data.get("model"), DatasetSpecValidator.MODELS, "数据模型"))
        _collect(errors, cleaned, "n", Validators.validate_int_range(data.get("n"), "环境维度 n", lower=2))
        _collect(errors, cleaned, "k0", Validators.validate_int_range(data.get("k0"), "公共子空间维度 k0", lower=1))
        for key in ("M1", "M2", "M3"):
            _collect(errors, cleaned, key, Validators.validate_int_range(data.get(key, 0), f"数量 {key}", lower=0))
        _collect(errors, cleaned, "eps1", Validators.validate_positive(data.get("eps1"), "大球半径 eps1"))
        eps2 = data.get("eps2")
        if eps2 is not None:
            _collect(errors, cleaned, "eps2", Validators.validate_positive(eps2, "小球半径 eps2"))
        if errors:
            return False, cleaned, errors

        n, k0 = cleaned["n"], cleaned["k0"]
        if k0 >= n:
            errors.append(f"k0 必须小于 n，当前 k0={k0}, n={n}")
        if cleaned["M1"] + cleaned["M2"] + cleaned["M3"] < 1:
            errors.append("样本总数 M 至少为 1")

        dims = data.get("dims")
        if dims:
            try:
                dims_list = sorted({int(p) for p in dims})
            except (ValueError, TypeError):
                errors.append("dims 必须是整数列表")
                dims_list = []
            lowest = min(int(data.get("k1") or k0), int(data.get("k2") or k0), k0)
            if dims_list and (dims_list[0] < lowest or dims_list[-1] > n):
                errors.append(f"dims 取值必须在 [{lowest}, {n}] 内")
            cleaned["dims"] = dims_list

        snr = data.get("snr_db")
        if snr is not None:
            try:
                snr_value = float(snr)
            except (ValueError, TypeError):
                errors.append("snr_db 必须是数字")
            else:
                if math.isnan(snr_value):
                    errors.append("snr_db 不能是 NaN")
                cleaned["snr_db"] = snr_value

        _collect(errors, cleaned, "small_ball",
                 Validators.validate_choice(data.get("small_ball") or "boundary",
                                            DatasetSpecValidator.PLACEMENTS, "小球采样位置"))

        for key in ("k1", "k2"):
            if data.get(key) is not None:
                _collect(errors, cleaned, key,
                         Validators.validate_int_range(data.get(key), key, lower=1, upper=n - 1))

        big = cleaned.get("k1") if data.get("k1") is not None else k0
        if isinstance(big, int) and cleaned["eps1"] > big:
            errors.append(f"eps1 不能超过大球维度 {big}（平方弦距离上限）")

        _collect(errors, cleaned, "seed",
                 Validators.validate_int_range(data.get("seed", 0), "随机种子", lower=0, upper=2 ** 64 - 1))
        return len(errors) == 0, cleaned, errors


class ExperimentConfigValidator:
    """试验配置验证器"""

    KINDS = ("accuracy", "warmstart", "order", "snr", "nocommon")

    @staticmethod
    def validate(data: dict) -> Tuple[bool, dict, List[str]]:
        """验证试验配置

        Returns:
            (是否有效, 清理后的数据, 错误列表)
        """
        errors: List[str] = []
        cleaned: dict = dict(data)
        _collect(errors, cleaned, "experiment",
                 Validators.validate_choice(data.get("experiment"), ExperimentConfigValidator.KINDS, "试验类型"))
        _collect(errors, cleaned, "trials", Validators.validate_int_range(data.get("trials"), "试验次数", lower=1))
        axis = data.get("axis")
        if axis is None or len(axis) == 0:
            errors.append("扫描轴不能为空")
        return len(errors) == 0, cleaned, errors
