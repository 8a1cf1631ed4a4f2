# -*- coding: utf-8 -*-
"""公共测试夹具"""

import os

import numpy as np
import pytest

from core.collection_io import read_collection
from core.config import Config
from core.grassmann import Basis, SubspaceCollection, random_basis
from core.logger import LogManager

REPO_DIR = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
TOY5_PATH = os.path.join(REPO_DIR, "data", "toy5.gss")

# 五维示例的已知中心
U1 = np.array([[1.0], [1.0], [1.0], [0.0], [0.0]]) / np.sqrt(3.0)
U2 = np.column_stack([np.array([3.0, 3.0, 2.0, 0.0, 0.0]) / np.sqrt(22.0),
                      np.array([0.0, 0.0, 0.0, 1.0, 1.0]) / np.sqrt(2.0)])
PRIMAL_K2 = (14.0 - 3.0 * np.sqrt(7.0)) / 24.0


@pytest.fixture(autouse=True)
def isolated_config(tmp_path, monkeypatch):
    """每个测试使用独立的配置文件与日志系统，关闭日志文件输出"""
    monkeypatch.setenv("GMEB_CONFIG", str(tmp_path / "settings.json"))
    monkeypatch.setenv("GMEB_LOG_FILES", "0")
    for key in ("GMEB_THREADS", "GMEB_LOG_LEVEL", "GMEB_SEED"):
        monkeypatch.delenv(key, raising=False)
    Config.reset()
    LogManager.reset()
    yield
    Config.reset()
    LogManager.reset()


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


@pytest.fixture
def toy5() -> SubspaceCollection:
    return read_collection(TOY5_PATH)


def random_collection(rng: np.random.Generator, n: int, dims) -> SubspaceCollection:
    return SubspaceCollection([random_basis(n, p, rng) for p in dims])


def identical_collection(rng: np.random.Generator, n: int, p: int, m: int) -> SubspaceCollection:
    x = random_basis(n, p, rng)
    return SubspaceCollection([x] * m)


def axis_lines(n: int) -> SubspaceCollection:
    """n 条两两正交的坐标轴直线"""
    return SubspaceCollection([Basis(np.eye(n)[:, [i]]) for i in range(n)])
