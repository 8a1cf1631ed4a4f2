# -*- coding: utf-8 -*-
"""
异常定义模块 - 统一的错误类型与退出码

- 几何类错误（维度不匹配、秩亏损、满空间）
- 求解器错误（零向量、非有限代价、配置无效）
- 数据生成与文件读写错误
- 非致命警告使用 warnings 模块的专用类别
"""

from typing import Optional


# 进程退出码
EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


class GmebError(Exception):
    """所有业务错误的基类"""

    exit_code: int = EXIT_NUMERICAL

    def __init__(self, message: str, exit_code: Optional[int] = None):
        super().__init__(message)
        if exit_code is not None:
            self.exit_code = exit_code


# ---------------------------------------------------------------- 几何
class DimensionMismatch(GmebError):
    """环境维度不一致"""


class RankDeficient(GmebError):
    """矩阵数值秩不足"""

    def __init__(self, message: str, rank: int = -1, expected: int = -1):
        super().__init__(message)
        self.rank = rank
        self.expected = expected


class DegenerateCompletion(GmebError):
    """最近点构造时补全列线性相关"""


class FullSpace(GmebError):
    """子空间已是整个空间，正交补为空"""


# ---------------------------------------------------------------- 求解器
class ZeroVector(GmebError):
    """单纯形归一化时向量全部非正"""


class NonFiniteCost(GmebError):
    """迭代中出现 NaN/Inf 代价"""


class InvalidConfig(GmebError):
    """参数或配置无效"""

    exit_code = EXIT_CONFIG

    def __init__(self, message: str, errors: Optional[list] = None):
        super().__init__(message)
        self.errors = list(errors or [])


# ---------------------------------------------------------------- 阶数选择
class TooFewValues(GmebError):
    """奇异值个数不足以拟合两条直线"""


# ---------------------------------------------------------------- 数据生成
class RadiusTooLarge(GmebError):
    """球半径超过平方弦距离上限"""


class InfeasiblePlacement(GmebError):
    """无法放置满足嵌套条件的小球"""


class PoolExhausted(GmebError):
    """正交方向池已用尽"""


# ---------------------------------------------------------------- 文件读写
class ParseError(GmebError):
    """集合文件解析失败"""

    exit_code = EXIT_CONFIG

    def __init__(self, message: str, line: int = 0):
        super().__init__(f"第{line}行: {message}" if line else message)
        self.line = line


class SchemaError(GmebError):
    """JSON 结构不符合约定"""

    exit_code = EXIT_CONFIG


# ---------------------------------------------------------------- 警告
class GmebWarning(RuntimeWarning):
    """非致命数值警告基类"""


class DegenerateEigengapWarning(GmebWarning):
    """第 k 与第 k+1 个特征值相等，主特征子空间不唯一"""


class NegativeEigenvaluesDominantWarning(GmebWarning):
    """MDS 前两个特征值不全为正，或负谱超过第二大特征值"""
