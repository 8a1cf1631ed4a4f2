# -*- coding: utf-8 -*-
"""
Grassmann 几何模块 - 子空间表示、主角、点到集合距离

- Basis: n×p 列正交矩阵，表示 Gr(p,n) 上的一点
- SubspaceCollection: 共享环境维度 n、维度可不同的子空间集合
- 主角、平方弦距离、点到集合距离、最近点、正交补
- 加权外蕴均值（加权投影矩阵的主特征子空间）

约定：角度一律为弧度，距离为平方弦距离（无量纲）；
比较子空间时使用距离而不是矩阵本身（特征分解的符号/旋转不唯一）。
"""

import logging
import warnings
from dataclasses import InitVar, dataclass, field
from typing import Iterator, List, Optional, Sequence, Tuple

import numpy as np
from scipy import linalg as sla

from core.exceptions import (
    DegenerateCompletion,
    DegenerateEigengapWarning,
    DimensionMismatch,
    FullSpace,
    GmebError,
    InvalidConfig,
    RankDeficient,
)
from core.validators import Validators

logger = logging.getLogger(__name__)

# 数值容差
ORTHONORMAL_TOL = 1e-10
SINGULAR_OVERSHOOT = 1e-12
EIGENGAP_TOL = 1e-12
RANK_TOL = 1e-10

AngleVector = np.ndarray


@dataclass(frozen=True, eq=False)
class Basis:
    """Gr(p,n) 上一点的正交基表示"""

    columns: np.ndarray
    check: InitVar[bool] = True

    def __post_init__(self, check: bool):
        m = np.asarray(self.columns, dtype=float)
        if m.ndim == 1:
            m = m.reshape(-1, 1)
        if check:
            result = Validators.validate_basis_matrix(m, ORTHONORMAL_TOL)
            if not result.valid:
                raise InvalidConfig(f"无效的正交基: {result.error}")
        m = np.array(m, dtype=float, copy=True)
        m.setflags(write=False)
        object.__setattr__(self, "columns", m)

    @property
    def n(self) -> int:
        return self.columns.shape[0]

    @property
    def p(self) -> int:
        return self.columns.shape[1]

    @property
    def shape(self) -> Tuple[int, int]:
        return self.columns.shape

    def projector(self) -> np.ndarray:
        """正交投影矩阵 B Bᵀ"""
        return self.columns @ self.columns.T

    def __repr__(self) -> str:
        return f"Basis(n={self.n}, p={self.p})"


@dataclass
class SubspaceCollection:
    """共享环境维度的子空间集合"""

    items: List[Basis] = field(default_factory=list)

    def __post_init__(self):
        self.items = list(self.items)
        if len(self.items) < 1:
            raise InvalidConfig("子空间集合至少包含一个元素")
        n = self.items[0].n
        for idx, item in enumerate(self.items):
            if item.n != n:
                raise DimensionMismatch(f"第{idx}个子空间的环境维度为 {item.n}，期望 {n}")

    @property
    def n(self) -> int:
        return self.items[0].n

    @property
    def dims(self) -> List[int]:
        return [item.p for item in self.items]

    @property
    def max_dim(self) -> int:
        return max(self.dims)

    def __len__(self) -> int:
        return len(self.items)

    def __iter__(self) -> Iterator[Basis]:
        return iter(self.items)

    def __getitem__(self, idx: int) -> Basis:
        return self.items[idx]

    def stacked(self, weights: Optional[np.ndarray] = None) -> np.ndarray:
        """拼接 [√w_1 X_1, …, √w_M X_M]，n×Σp_i"""
        if weights is None:
            return np.hstack([item.columns for item in self.items])
        return np.hstack([np.sqrt(w) * item.columns for w, item in zip(weights, self.items)])


def _check_same_n(a: Basis, b: Basis) -> None:
    if a.n != b.n:
        raise DimensionMismatch(f"环境维度不一致: {a.n} vs {b.n}")


def as_basis(matrix) -> Basis:
    """只做校验的构造函数，不做正交化"""
    return Basis(np.asarray(matrix, dtype=float))


def orthonormalize(matrix, tol: float = RANK_TOL) -> Basis:
    """把满列秩矩阵正交化为同列空间的 Basis

    用薄 QR 分解，并把 R 的对角线翻成正数，已正交的输入原样返回。

    Args:
        matrix: n×p 实矩阵
        tol: 数值秩判定的相对阈值（最小/最大奇异值）

    Raises:
        RankDeficient: 数值秩小于 p
    """
    m = np.asarray(matrix, dtype=float)
    if m.ndim == 1:
        m = m.reshape(-1, 1)
    n, p = m.shape
    if p < 1 or p > n:
        raise RankDeficient(f"要求 1 <= p <= n，当前 n={n}, p={p}", rank=min(n, p), expected=p)
    if not np.all(np.isfinite(m)):
        raise RankDeficient("矩阵包含非有限值", rank=0, expected=p)

    s = sla.svdvals(m)
    rank = int(np.sum(s > tol * s[0])) if s[0] > 0 else 0
    if rank < p:
        raise RankDeficient(f"数值秩 {rank} 小于列数 {p}", rank=rank, expected=p)

    q, r = sla.qr(m, mode="economic")
    signs = np.sign(np.diag(r))
    signs[signs == 0] = 1.0
    return Basis(q * signs, check=False)


def random_basis(n: int, p: int, rng: np.random.Generator) -> Basis:
    """Gr(p,n) 上的均匀随机点"""
    return orthonormalize(rng.standard_normal((n, p)))


def random_orthogonal(n: int, rng: np.random.Generator) -> np.ndarray:
    """Haar 分布的 n×n 正交矩阵"""
    q, r = sla.qr(rng.standard_normal((n, n)))
    return q * np.sign(np.diag(r))


def principal_angles(a: Basis, b: Basis) -> AngleVector:
    """主角 θ_1 <= … <= θ_m，m = min(a.p, b.p)

    θ_i = arccos(σ_i)，σ_i 为 AᵀB 的奇异值（降序）。
    σ_i 在 (1, 1+1e-12] 内截断为 1，更大的越界视为输入不是正交基。
    """
    _check_same_n(a, b)
    sigma = sla.svdvals(a.columns.T @ b.columns)
    if sigma.size and sigma[0] > 1.0 + SINGULAR_OVERSHOOT:
        raise GmebError(f"奇异值越界 {sigma[0]:.17g}，输入不是正交基")
    sigma = np.clip(sigma, 0.0, 1.0)
    return np.arccos(sigma)


def p2s_distance(u: Basis, x: Basis) -> float:
    """点到集合的平方弦距离 min{k,p} − Tr(UᵀXXᵀU)

    等于前 min{k,p} 个主角的 sin² 之和，值域 [0, min(k,p)]。
    """
    _check_same_n(u, x)
    m = min(u.p, x.p)
    overlap = float(np.sum((u.columns.T @ x.columns) ** 2))
    return float(min(max(m - overlap, 0.0), m))


def chordal_distance(a: Basis, b: Basis) -> float:
    """等维子空间的平方弦距离"""
    if a.p != b.p:
        raise DimensionMismatch(f"平方弦距离要求等维: {a.p} vs {b.p}")
    return p2s_distance(a, b)


def closest_point(u: Basis, x: Basis) -> Basis:
    """Ω_*(X) 中离 U 最近的 k 维子空间 Y

    p >= k 时取 X 中前 k 个主向量，col(Y) ⊆ col(X)；
    p < k 时用 X 的全部主向量补上 U 中与 X 正交的 k−p 个主向量，col(X) ⊆ col(Y)。

    Raises:
        DimensionMismatch: 环境维度不一致
        DegenerateCompletion: 补全后的矩阵秩亏损
    """
    _check_same_n(u, x)
    k, p = u.p, x.p
    v, _, wt = sla.svd(u.columns.T @ x.columns, full_matrices=True)
    w = wt.T

    if p >= k:
        return orthonormalize(x.columns @ w[:, :k])

    padded = np.hstack([x.columns @ w[:, :p], u.columns @ v[:, p:k]])
    try:
        return orthonormalize(padded, tol=RANK_TOL)
    except RankDeficient as e:
        raise DegenerateCompletion(f"最近点补全列线性相关（秩 {e.rank} < {k}）") from e


def orthogonal_complement(u: Basis) -> Basis:
    """正交补 col(I − UUᵀ)，维度 n−k

    Raises:
        FullSpace: k == n
    """
    if u.p >= u.n:
        raise FullSpace(f"子空间维度 {u.p} 等于环境维度，正交补为空")
    return Basis(sla.null_space(u.columns.T), check=False)


def projection_fnorm_distance(a: Basis, b: Basis) -> float:
    """½‖AAᵀ − BBᵀ‖_F² = |p_a − p_b|/2 + p2s_distance(A,B)"""
    _check_same_n(a, b)
    overlap = float(np.sum((a.columns.T @ b.columns) ** 2))
    return max(0.5 * (a.p + b.p) - overlap, 0.0)


def weighted_projector(collection: SubspaceCollection, weights: np.ndarray) -> np.ndarray:
    """Σ w_i X_i X_iᵀ"""
    z = collection.stacked(np.asarray(weights, dtype=float))
    return z @ z.T


def dominant_eigenspace(matrix: np.ndarray, k: int) -> Tuple[Basis, np.ndarray, bool]:
    """对称矩阵的主 k 维特征子空间

    Returns:
        (Basis, 降序特征值, 第 k/k+1 个特征值是否相等)
    """
    n = matrix.shape[0]
    if not 1 <= k <= n:
        raise InvalidConfig(f"要求 1 <= k <= n，当前 k={k}, n={n}")
    sym = 0.5 * (matrix + matrix.T)
    evals, evecs = np.linalg.eigh(sym)
    evals = evals[::-1]
    evecs = evecs[:, ::-1]
    degenerate = bool(k < n and evals[k - 1] - evals[k] <= EIGENGAP_TOL)
    return Basis(evecs[:, :k], check=False), evals, degenerate


def extrinsic_mean(collection: SubspaceCollection, k: int,
                   weights: Optional[Sequence[float]] = None) -> Basis:
    """加权外蕴均值：Σ w_i X_i X_iᵀ 的主 k 维特征子空间

    weights 缺省为均匀权重。第 k 与 k+1 个特征值相等时发出
    DegenerateEigengapWarning，结果仍返回（取分解程序的确定性输出）。
    """
    if weights is None:
        weights = np.full(len(collection), 1.0 / len(collection))
    result = Validators.validate_simplex(weights, size=len(collection), tol=1e-9)
    if not result.valid:
        raise InvalidConfig(f"外蕴均值权重无效: {result.error}")
    if k > collection.n:
        raise InvalidConfig(f"中心维度 k={k} 超过环境维度 n={collection.n}")

    basis, evals, degenerate = dominant_eigenspace(weighted_projector(collection, result.value), k)
    if degenerate:
        warnings.warn(
            f"特征值 d_{k} 与 d_{k + 1} 相等（{evals[k - 1]:.6g}），主特征子空间不唯一",
            DegenerateEigengapWarning,
            stacklevel=2,
        )
    return basis
