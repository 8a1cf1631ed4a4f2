# -*- coding: utf-8 -*-
"""
合成数据生成模块 - 带真值中心与真值阶数的子空间集合

- 非对称嵌套球：大球边界 M1 个点 + 小球 M2 个点 + 大球内部 M3 个点
- 单位球 + 随机边界弧：大球边界 M1 个点 + 弧上 M2 个点 + 内部 M3 个点
- 补全到混合维度 p_i（正交方向池或自由高斯方向）
- 按 SNR 标定的高斯噪声
- 无公共子空间的独立随机集合

球半径使用平方弦距离，与求解器的度量一致。
给定 (spec, seed) 时生成结果逐位确定。
"""

import math
import logging
from dataclasses import asdict, dataclass, field, fields
from enum import Enum
from typing import List, Optional, Sequence

import numpy as np
from scipy import linalg as sla
from scipy.optimize import brentq

from core.exceptions import (
    InfeasiblePlacement,
    InvalidConfig,
    PoolExhausted,
    RadiusTooLarge,
)
from core.grassmann import (
    RANK_TOL,
    Basis,
    SubspaceCollection,
    orthonormalize,
    p2s_distance,
    random_basis,
)
from core.validators import DatasetSpecValidator

logger = logging.getLogger(__name__)

RADIUS_SLACK = 1e-12
MAX_REJECTIONS = 1000


class Where(str, Enum):
    BOUNDARY = "boundary"
    INTERIOR = "interior"


class Provenance(str, Enum):
    """样本来源"""
    LARGE_BOUNDARY = "LargeBoundary"
    SMALL_BALL = "SmallBall"
    ARC_BOUNDARY = "ArcBoundary"
    INTERIOR = "Interior"
    RANDOM = "Random"


@dataclass(frozen=True)
class DatasetSpec:
    """生成器参数

    model 为 nested_ball 或 arc；k0 为大球（真值）维度，k1/k2 用于嵌套球的
    第二种推广（大球在 Gr(k1,n)，小球在 Gr(k2,n)，真值阶数为 k1）。
    dims 为补全维度的候选集合，缺省不补全。snr_db 为 None 或 +inf 时不加噪声。
    """
    model: str
    n: int
    k0: int
    eps1: float
    eps2: Optional[float] = None
    M1: int = 0
    M2: int = 0
    M3: int = 0
    dims: Optional[List[int]] = None
    orthogonal_completion: bool = False
    snr_db: Optional[float] = None
    seed: int = 0
    k1: Optional[int] = None
    k2: Optional[int] = None
    small_ball: str = "boundary"

    def __post_init__(self):
        ok, cleaned, errors = DatasetSpecValidator.validate(asdict(self))
        if not ok:
            raise InvalidConfig("数据集规格无效: " + "; ".join(errors), errors)
        for key in ("model", "n", "k0", "eps1", "eps2", "M1", "M2", "M3", "dims",
                    "snr_db", "seed", "k1", "k2", "small_ball"):
            if key in cleaned:
                object.__setattr__(self, key, cleaned[key])
        object.__setattr__(self, "orthogonal_completion", bool(self.orthogonal_completion))

    @property
    def M(self) -> int:
        return self.M1 + self.M2 + self.M3

    @property
    def large_dim(self) -> int:
        return self.k1 or self.k0

    @property
    def small_dim(self) -> int:
        return self.k2 or self.large_dim

    def to_dict(self) -> dict:
        data = asdict(self)
        if data["snr_db"] is not None and math.isinf(data["snr_db"]):
            data["snr_db"] = None
        return data

    @classmethod
    def from_dict(cls, data: dict) -> "DatasetSpec":
        known = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in data.items() if k in known})

    def replace(self, **changes) -> "DatasetSpec":
        data = self.to_dict()
        data.update(changes)
        return DatasetSpec.from_dict(data)


@dataclass
class Dataset:
    """生成结果

    Attributes:
        collection: 加噪后的集合
        truth_center: 真值中心 Z1（无公共子空间时为 None）
        truth_k: 真值阶数
        provenance: 每个样本的来源
        cores: 补全前的球面样本（维度为所在球的 k）
        clean: 补全后、加噪前的基
    """
    collection: SubspaceCollection
    truth_center: Optional[Basis]
    truth_k: int
    provenance: List[Provenance] = field(default_factory=list)
    cores: List[Basis] = field(default_factory=list)
    clean: List[Basis] = field(default_factory=list)
    spec: Optional[DatasetSpec] = None


# ---------------------------------------------------------------- 测地线采样

def _complement_projector(center: Basis, avoid: Optional[Basis]) -> np.ndarray:
    proj = np.eye(center.n) - center.projector()
    if avoid is not None:
        proj -= avoid.projector()
    return proj


def random_tangent(center: Basis, rng: np.random.Generator,
                   avoid: Optional[Basis] = None) -> np.ndarray:
    """水平切向量 Δ（centerᵀΔ = 0），单位 Frobenius 范数

    avoid 给出时 Δ 同时与 avoid 的列正交（avoid 须与 center 正交）。
    """
    delta = _complement_projector(center, avoid) @ rng.standard_normal(center.shape)
    norm = np.linalg.norm(delta)
    if norm == 0:
        raise InfeasiblePlacement("切空间为空，无法沿测地线移动")
    return delta / norm


def _distance_profile(scales: np.ndarray, t: float) -> float:
    return float(np.sum(np.sin(scales * t) ** 2))


def geodesic_point(center: Basis, tangent: np.ndarray, target: float) -> Basis:
    """沿切方向走到与 center 的平方弦距离恰为 target 的点

    Δ = PΣQᵀ，X(t) = center·Q·cos(Σ̂t) + P·sin(Σ̂t)，Σ̂ = Σ/σ_max，
    t ∈ [0, π/2] 上二分求解 Σ sin²(σ̂_r t) = target。
    """
    k = center.p
    if target > k - RADIUS_SLACK:
        raise RadiusTooLarge(f"半径 {target} 超过 Gr({k},{center.n}) 上的距离上限 {k}")
    if target <= 0:
        return center
    p, sigma, qt = sla.svd(tangent, full_matrices=False)
    scales = sigma / sigma[0]
    if _distance_profile(scales, math.pi / 2) < target:
        # 切向量过于不均匀，非零奇异方向上改用相同的角度
        scales = (sigma > RANK_TOL * sigma[0]).astype(float)
        if _distance_profile(scales, math.pi / 2) < target - RADIUS_SLACK:
            raise RadiusTooLarge(f"切向量秩 {int(scales.sum())} 不足以到达距离 {target}")
    t = brentq(lambda s: _distance_profile(scales, s) - target, 0.0, math.pi / 2, xtol=1e-15)
    angles = scales * t
    x = center.columns @ qt.T * np.cos(angles) + p * np.sin(angles)
    return orthonormalize(x)


def sample_ball(center: Basis, radius: float, where: Where, count: int,
                rng: np.random.Generator, avoid: Optional[Basis] = None) -> List[Basis]:
    """在 B_radius(center) 的边界或内部采样

    内部样本的目标距离为 radius·u^{1/(k(n−k))}，u ~ U(0,1)，只是流形球内均匀分布的近似。

    Raises:
        RadiusTooLarge: radius > k − 1e-12
    """
    k, n = center.p, center.n
    if k >= n:
        raise InvalidConfig(f"球心维度 k={k} 必须小于 n={n}")
    if radius <= 0:
        raise InvalidConfig(f"半径必须为正数，当前为 {radius}")
    if radius > k - RADIUS_SLACK:
        raise RadiusTooLarge(f"半径 {radius} 超过 Gr({k},{n}) 上的距离上限 {k}")
    where = Where(where)
    exponent = 1.0 / (k * (n - k))
    samples = []
    for _ in range(count):
        target = radius if where is Where.BOUNDARY else radius * rng.uniform() ** exponent
        samples.append(geodesic_point(center, random_tangent(center, rng, avoid), target))
    return samples


def _slerp(a: np.ndarray, b: np.ndarray, s: float) -> np.ndarray:
    omega = math.acos(float(np.clip(np.sum(a * b), -1.0, 1.0)))
    if omega < 1e-12:
        return a
    return (math.sin((1 - s) * omega) * a + math.sin(s * omega) * b) / math.sin(omega)


def sample_arc(center: Basis, radius: float, count: int, rng: np.random.Generator,
               avoid: Optional[Basis] = None) -> List[Basis]:
    """在球边界上两个随机锚点之间的弧上均匀采样

    锚点的切向量做球面插值，再沿插值方向走回边界。
    """
    start = random_tangent(center, rng, avoid)
    end = random_tangent(center, rng, avoid)
    return [geodesic_point(center, _slerp(start, end, rng.uniform()), radius)
            for _ in range(count)]


# ---------------------------------------------------------------- 补全与噪声

class OrthogonalPool:
    """互相正交的补全方向池，每个方向只分配一次"""

    def __init__(self, directions: np.ndarray):
        self.directions = np.asarray(directions, dtype=float)
        self._next = 0

    @classmethod
    def build(cls, truth: Basis, size: int, rng: np.random.Generator) -> "OrthogonalPool":
        """在 truth 的正交补中取 size 个随机正交方向"""
        if size > truth.n - truth.p:
            raise PoolExhausted(f"需要 {size} 个正交方向，正交补只有 {truth.n - truth.p} 维")
        if size == 0:
            return cls(np.zeros((truth.n, 0)))
        g = (np.eye(truth.n) - truth.projector()) @ rng.standard_normal((truth.n, size))
        return cls(orthonormalize(g).columns)

    @property
    def remaining(self) -> int:
        return self.directions.shape[1] - self._next

    def as_basis(self) -> Optional[Basis]:
        if self.directions.shape[1] == 0:
            return None
        return Basis(self.directions, check=False)

    def take(self, count: int) -> np.ndarray:
        if count > self.remaining:
            raise PoolExhausted(f"方向池剩余 {self.remaining} 个，请求 {count} 个")
        block = self.directions[:, self._next:self._next + count]
        self._next += count
        return block


def complete_basis(core: Basis, p: int, rng: np.random.Generator,
                   pool: Optional[OrthogonalPool] = None) -> Basis:
    """把 k0 维样本补全为 p 维，col(core) ⊆ col(结果)

    pool 给出时从池中取互相正交的方向（调用方保证池方向与 core 正交），
    否则取与 core 正交化后的高斯随机方向。
    """
    extra = p - core.p
    if extra < 0:
        raise InvalidConfig(f"补全维度 p={p} 小于样本维度 {core.p}")
    if p > core.n:
        raise InvalidConfig(f"补全维度 p={p} 超过环境维度 {core.n}")
    if extra == 0:
        return core
    block = pool.take(extra) if pool is not None else rng.standard_normal((core.n, extra))
    return orthonormalize(np.hstack([core.columns, block]))


def noise_variance(snr_db: float, truth_k: int) -> float:
    """σ_N² = k*/10^(SNR/10)"""
    return truth_k / 10.0 ** (snr_db / 10.0)


def add_noise(collection: SubspaceCollection, snr_db: Optional[float], truth_k: int,
              rng: np.random.Generator) -> SubspaceCollection:
    """给每个基加高斯噪声后重新正交化

    第 i 个基每个元素的方差为 σ_N²/(n·p_i)，即每个基的总噪声功率为 σ_N²。
    snr_db 为 None 或 +inf 时原样返回。
    """
    if snr_db is None or snr_db == math.inf:
        return collection
    if not math.isfinite(snr_db):
        raise InvalidConfig(f"snr_db 必须是有限值或 +inf，当前为 {snr_db}")
    variance = noise_variance(snr_db, truth_k)
    noisy = []
    for item in collection:
        scale = math.sqrt(variance / (item.n * item.p))
        noisy.append(orthonormalize(item.columns + scale * rng.standard_normal(item.shape)))
    return SubspaceCollection(noisy)


# ---------------------------------------------------------------- 数据模型

def _draw_dims(spec: DatasetSpec, core_dims: Sequence[int], rng: np.random.Generator) -> List[int]:
    if not spec.dims:
        return list(core_dims)
    result = []
    for k in core_dims:
        choices = [p for p in spec.dims if p >= k]
        if not choices:
            raise InvalidConfig(f"dims 中没有不小于 {k} 的维度")
        result.append(int(rng.choice(choices)))
    return result


def _reserve_pool(spec: DatasetSpec, truth: Basis, dims: Sequence[int], core_dims: Sequence[int],
                  rng: np.random.Generator) -> Optional[OrthogonalPool]:
    """正交补全模式下预留方向池，池与真值及全部样本的切方向正交"""
    if not spec.orthogonal_completion or not spec.dims:
        return None
    needed = sum(p - k for p, k in zip(dims, core_dims))
    # 至少保留一个切方向给球面采样
    if needed > spec.n - truth.p - 1:
        raise PoolExhausted(f"正交补全需要 {needed} 个方向，最多可用 {spec.n - truth.p - 1} 个")
    return OrthogonalPool.build(truth, needed, rng)


def _finish(spec: DatasetSpec, truth: Basis, truth_k: int, cores: List[Basis],
            provenance: List[Provenance], core_dims: List[int], dims: List[int],
            pool: Optional[OrthogonalPool], rng: np.random.Generator) -> Dataset:
    clean = [complete_basis(core, p, rng, pool) for core, p in zip(cores, dims)]
    collection = add_noise(SubspaceCollection(clean), spec.snr_db, truth_k, rng)
    logger.debug("生成数据集 model=%s n=%d M=%d truth_k=%d", spec.model, spec.n, len(clean), truth_k)
    return Dataset(collection=collection, truth_center=truth, truth_k=truth_k,
                   provenance=provenance, cores=cores, clean=clean, spec=spec)


def _small_center(spec: DatasetSpec, z1: Basis, rng: np.random.Generator,
                  avoid: Optional[Basis]) -> Basis:
    """小球球心 Z2：d(Z1, Z2) 取可行区间 (eps2, eps1 − s) 的中点

    s = eps2·min(1, k1/k2) 是小球样本相对 Z2 向 Z1 之外扩展的典型量
    （随机切方向下平方弦距离近似相加）。k2 <= k1 时从 Z1 的前 k2 列出发，
    切向量与整个 Z1 正交；k2 > k1 时先在 Gr(k1,n) 上移动，再补入与 Z1、Z2 都正交的方向。
    两种情况下点到集合距离 d(Z1, Z2) 都恰为目标值。

    Raises:
        InfeasiblePlacement: 区间为空，或补全方向不够
    """
    eps1, eps2 = spec.eps1, spec.eps2
    k1, k2 = z1.p, spec.small_dim
    spread = eps2 * min(1.0, k1 / k2)
    if eps2 >= eps1 - spread:
        raise InfeasiblePlacement(
            f"无法放置 Z2：需要 eps2 < eps1 − {spread:.4g}，当前 eps1={eps1}, eps2={eps2}")
    offset = 0.5 * (eps2 + eps1 - spread)

    if k2 <= k1:
        start = Basis(z1.columns[:, :k2], check=False)
        delta = _complement_projector(z1, avoid) @ rng.standard_normal((spec.n, k2))
        norm = np.linalg.norm(delta)
        if norm == 0:
            raise InfeasiblePlacement("Z1 的正交补为空，无法放置 Z2")
        z2 = geodesic_point(start, delta / norm, offset)
    else:
        z2 = geodesic_point(z1, random_tangent(z1, rng, avoid), offset)
        blocks = [z2.columns, z1.columns] + ([avoid.columns] if avoid is not None else [])
        exclude = sla.orth(np.hstack(blocks))
        if exclude.shape[1] + k2 - k1 > spec.n:
            raise InfeasiblePlacement(f"n={spec.n} 不足以把 Z2 扩展到 {k2} 维")
        fresh = (np.eye(spec.n) - exclude @ exclude.T) @ rng.standard_normal((spec.n, k2 - k1))
        z2 = orthonormalize(np.hstack([z2.columns, fresh]))
    logger.debug("Z2 放置在 d(Z1,Z2)=%.4g 处（k1=%d, k2=%d）", offset, k1, k2)
    return z2


def nested_ball_dataset(spec: DatasetSpec, rng: np.random.Generator) -> Dataset:
    """非对称嵌套球模型

    大球 B_eps1(Z1) 边界 M1 个点，小球 B_eps2(Z2) ⊂ B_eps1(Z1) 中 M2 个点，
    大球内部 M3 个点，真值中心为 Z1。小球样本若落在大球外则重新采样。

    Raises:
        InfeasiblePlacement: eps2 缺失或 eps2 >= eps1，或无法放置 Z2
    """
    if spec.M2 > 0 and (spec.eps2 is None or spec.eps2 >= spec.eps1):
        raise InfeasiblePlacement(f"嵌套球要求 eps2 < eps1，当前 eps1={spec.eps1}, eps2={spec.eps2}")
    k1, k2 = spec.large_dim, spec.small_dim
    z1 = random_basis(spec.n, k1, rng)
    core_dims = [k1] * spec.M1 + [k2] * spec.M2 + [k1] * spec.M3
    dims = _draw_dims(spec, core_dims, rng)
    pool = _reserve_pool(spec, z1, dims, core_dims, rng)
    avoid = pool.as_basis() if pool is not None else None

    cores = sample_ball(z1, spec.eps1, Where.BOUNDARY, spec.M1, rng, avoid)
    provenance = [Provenance.LARGE_BOUNDARY] * spec.M1

    if spec.M2 > 0:
        z2 = _small_center(spec, z1, rng, avoid)
        accepted = 0
        attempts = 0
        while accepted < spec.M2:
            attempts += 1
            if attempts > MAX_REJECTIONS * spec.M2:
                raise InfeasiblePlacement("小球样本多次落在大球外，无法满足嵌套条件")
            x = sample_ball(z2, spec.eps2, Where(spec.small_ball), 1, rng, avoid)[0]
            if p2s_distance(z1, x) <= spec.eps1:
                cores.append(x)
                accepted += 1
        provenance += [Provenance.SMALL_BALL] * spec.M2
        logger.debug("小球采样接受率 %.2f", spec.M2 / attempts)

    cores += sample_ball(z1, spec.eps1, Where.INTERIOR, spec.M3, rng, avoid)
    provenance += [Provenance.INTERIOR] * spec.M3
    return _finish(spec, z1, k1, cores, provenance, core_dims, dims, pool, rng)


def arc_dataset(spec: DatasetSpec, rng: np.random.Generator) -> Dataset:
    """单位球 + 随机边界弧模型：边界 M1 个点、弧上 M2 个点、内部 M3 个点"""
    k0 = spec.large_dim
    z1 = random_basis(spec.n, k0, rng)
    core_dims = [k0] * spec.M
    dims = _draw_dims(spec, core_dims, rng)
    pool = _reserve_pool(spec, z1, dims, core_dims, rng)
    avoid = pool.as_basis() if pool is not None else None

    cores = sample_ball(z1, spec.eps1, Where.BOUNDARY, spec.M1, rng, avoid)
    cores += sample_arc(z1, spec.eps1, spec.M2, rng, avoid) if spec.M2 > 0 else []
    cores += sample_ball(z1, spec.eps1, Where.INTERIOR, spec.M3, rng, avoid)
    provenance = ([Provenance.LARGE_BOUNDARY] * spec.M1 + [Provenance.ARC_BOUNDARY] * spec.M2
                  + [Provenance.INTERIOR] * spec.M3)
    return _finish(spec, z1, k0, cores, provenance, core_dims, dims, pool, rng)


def no_common_dataset(n: int, M: int, dims: Sequence[int], rng: np.random.Generator) -> Dataset:
    """M 个独立的均匀随机子空间，p_i 从 dims 中抽取，真值阶数为 0"""
    if M < 1 or not dims or min(dims) < 1 or max(dims) > n:
        raise InvalidConfig(f"无公共子空间数据参数无效: n={n}, M={M}, dims={list(dims)}")
    items = [random_basis(n, int(rng.choice(list(dims))), rng) for _ in range(M)]
    return Dataset(collection=SubspaceCollection(items), truth_center=None, truth_k=0,
                   provenance=[Provenance.RANDOM] * M, cores=list(items), clean=list(items))


def generate(spec: DatasetSpec, rng: Optional[np.random.Generator] = None) -> Dataset:
    """按 spec.model 分派，rng 缺省由 spec.seed 构造"""
    rng = rng if rng is not None else np.random.default_rng(spec.seed)
    if spec.model == "nested_ball":
        return nested_ball_dataset(spec, rng)
    return arc_dataset(spec, rng)
