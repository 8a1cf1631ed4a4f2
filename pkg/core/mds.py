# -*- coding: utf-8 -*-
"""
经典多维尺度分析 - 把子空间集合嵌入平面，用于绘图数据

子空间之间取弦距离 √(½‖AAᵀ − BBᵀ‖_F²)（等维时即平方弦距离的平方根）。
"""

import logging
import warnings
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import linalg as sla

from core.exceptions import InvalidConfig, NegativeEigenvaluesDominantWarning
from core.grassmann import Basis, SubspaceCollection, projection_fnorm_distance

logger = logging.getLogger(__name__)

SYMMETRY_TOL = 1e-9
NEGATIVE_TOL = 1e-10


def double_center(distances: np.ndarray) -> np.ndarray:
    """B = −½ J D⁽²⁾ J，J = I − 11ᵀ/M"""
    m = distances.shape[0]
    j = np.eye(m) - np.full((m, m), 1.0 / m)
    return -0.5 * j @ (distances ** 2) @ j


def mds_embed(distances) -> np.ndarray:
    """经典 MDS 二维坐标

    取 B 的前两个特征对，坐标 = 特征向量 × √特征值；
    每列绝对值最大的元素翻为正，结果确定。
    前两个特征值不全为正（平面嵌入退化），或最负特征值的绝对值超过第二大特征值
    （负谱占主导，距离不可欧氏嵌入）时发出 NegativeEigenvaluesDominantWarning；
    负的坐标尺度截为零。

    Args:
        distances: M×M 对称非负、对角为零的距离矩阵
    """
    d = np.asarray(distances, dtype=float)
    if d.ndim != 2 or d.shape[0] != d.shape[1]:
        raise InvalidConfig(f"距离矩阵必须是方阵，当前形状 {d.shape}")
    if np.any(d < 0) or not np.allclose(d, d.T, atol=SYMMETRY_TOL) \
            or np.max(np.abs(np.diag(d)), initial=0.0) > SYMMETRY_TOL:
        raise InvalidConfig("距离矩阵必须对称、非负且对角为零")

    m = d.shape[0]
    b = double_center(0.5 * (d + d.T))
    spectrum, vectors = sla.eigh(b)
    order = np.argsort(spectrum)[::-1]
    spectrum, vectors = spectrum[order], vectors[:, order]
    evals, evecs = spectrum[:2], vectors[:, :2]
    if evals.size < 2:
        evals = np.append(evals, 0.0)
        evecs = np.hstack([evecs, np.zeros((m, 1))])

    scale = max(1.0, abs(spectrum[0]))
    lowest = spectrum[-1]
    if evals[1] <= NEGATIVE_TOL * scale or -lowest > evals[1]:
        warnings.warn(f"MDS 前两个特征值 {evals[0]:.6g}, {evals[1]:.6g}，最负特征值 {lowest:.6g}",
                      NegativeEigenvaluesDominantWarning, stacklevel=2)
        logger.warning("MDS 平面嵌入退化或负谱占主导: %s", spectrum.tolist())

    coords = evecs * np.sqrt(np.clip(evals, 0.0, None))
    for col in range(coords.shape[1]):
        pivot = np.argmax(np.abs(coords[:, col]))
        if coords[pivot, col] < 0:
            coords[:, col] = -coords[:, col]
    return coords


def distance_matrix(bases: Sequence[Basis]) -> np.ndarray:
    """两两弦距离"""
    m = len(bases)
    d = np.zeros((m, m))
    for i in range(m):
        for j in range(i + 1, m):
            d[i, j] = d[j, i] = np.sqrt(projection_fnorm_distance(bases[i], bases[j]))
    return d


def embed_collection(collection: SubspaceCollection,
                     extra: Optional[Dict[str, Basis]] = None) -> Tuple[List[str], np.ndarray]:
    """集合（可附加带标签的中心）嵌入平面

    Returns:
        (标签列表, M'×2 坐标)，样本标签为 x0, x1, …
    """
    labels = [f"x{i}" for i in range(len(collection))]
    bases = list(collection)
    for label, basis in (extra or {}).items():
        labels.append(label)
        bases.append(basis)
    return labels, mds_embed(distance_matrix(bases))
