# -*- coding: utf-8 -*-
"""
配置管理模块

- 配置保存在 data/settings.json（可由 GMEB_CONFIG 指定），首次使用时写入默认值
- 支持 "solver.a" 形式的点号键访问
- 环境变量覆盖：GMEB_THREADS / GMEB_LOG_LEVEL / GMEB_SEED
- 优先级：命令行参数 > 环境变量 > 配置文件 > 内置默认值
"""

import os
import copy
import json
import logging
from typing import Any, Dict, List, Optional

logger = logging.getLogger(__name__)


DEFAULT_CONFIG: Dict[str, Any] = {
    "solver": {
        "a": 1.0,
        "eta": 1e-9,
        "zeta": 1e-6,
        "beta": 1.5,
        "max_iter": 5000,
        "history_window": 10,
        "step_mode": "backtracking",
        "projection": "euclidean",
    },
    "experiment": {
        "threads": 0,  # 0 表示逻辑核数
        "trials": 20,
        "seed": 0,
    },
    "log_level": "INFO",
}


class Config:
    """配置管理类"""

    _instance = None

    # 环境变量 -> 配置键
    ENV_MAP: Dict[str, List[str]] = {
        "experiment.threads": ["GMEB_THREADS"],
        "log_level": ["GMEB_LOG_LEVEL"],
        "experiment.seed": ["GMEB_SEED"],
    }

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
            cls._instance._config = {}
            cls._instance._load_config()
        return cls._instance

    @classmethod
    def reset(cls) -> None:
        """丢弃单例（测试或切换配置文件时使用）"""
        cls._instance = None

    def _get_config_path(self) -> str:
        """获取配置文件路径"""
        env_path = os.environ.get("GMEB_CONFIG")
        if env_path:
            return env_path
        base_dir = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
        return os.path.join(base_dir, "data", "settings.json")

    def _load_config(self) -> None:
        """加载配置，缺失的键用默认值补齐"""
        config_path = self._get_config_path()
        loaded: Dict[str, Any] = {}
        if os.path.exists(config_path):
            try:
                with open(config_path, 'r', encoding='utf-8') as f:
                    loaded = json.load(f)
            except (json.JSONDecodeError, IOError):
                logger.warning("配置文件损坏，使用默认配置: %s", config_path)
                loaded = {}
            self._config = self._merge(copy.deepcopy(DEFAULT_CONFIG), loaded)
        else:
            self._config = copy.deepcopy(DEFAULT_CONFIG)
            self._save_config()

    @staticmethod
    def _merge(base: dict, override: dict) -> dict:
        for key, value in (override or {}).items():
            if isinstance(value, dict) and isinstance(base.get(key), dict):
                Config._merge(base[key], value)
            else:
                base[key] = value
        return base

    def _save_config(self) -> None:
        """保存配置（带文件锁）"""
        config_path = self._get_config_path()
        try:
            from core.file_lock import atomic_write

            with atomic_write(config_path, timeout=5.0) as f:
                json.dump(self._config, f, ensure_ascii=False, indent=2)
        except TimeoutError:
            logger.error("保存配置失败：无法获取文件锁")
        except OSError:
            # 只读环境下仍可使用内存中的配置
            logger.debug("配置文件不可写，仅使用内存配置: %s", config_path)

    def _get_env_override(self, key: str) -> Optional[str]:
        for env_key in self.ENV_MAP.get(key, []):
            val = os.environ.get(env_key)
            if val is None:
                continue
            val = str(val).strip()
            if val:
                return val
        return None

    def get(self, key: str, default: Any = None, include_env: bool = True) -> Any:
        """获取配置项，支持点号路径"""
        if include_env:
            env_val = self._get_env_override(key)
            if env_val is not None:
                return self._coerce(key, env_val)

        node: Any = self._config
        for part in key.split("."):
            if not isinstance(node, dict) or part not in node:
                return default
            node = node[part]
        return node

    def _coerce(self, key: str, raw: str) -> Any:
        """按默认值的类型转换环境变量字符串"""
        node: Any = DEFAULT_CONFIG
        for part in key.split("."):
            node = node.get(part) if isinstance(node, dict) else None
        try:
            if isinstance(node, bool):
                return raw.lower() in ("1", "true", "yes")
            if isinstance(node, int):
                return int(raw)
            if isinstance(node, float):
                return float(raw)
        except ValueError:
            logger.warning("环境变量取值无效，忽略: %s=%s", key, raw)
            return self.get(key, include_env=False)
        return raw

    def set(self, key: str, value: Any, persist: bool = True) -> None:
        """设置配置项"""
        parts = key.split(".")
        node = self._config
        for part in parts[:-1]:
            node = node.setdefault(part, {})
        node[parts[-1]] = value
        if persist:
            self._save_config()

    def get_all(self) -> dict:
        """获取所有配置"""
        return copy.deepcopy(self._config)

    def threads(self) -> int:
        """试验线程池大小，0 表示逻辑核数"""
        value = int(self.get("experiment.threads", 0) or 0)
        if value <= 0:
            value = os.cpu_count() or 1
        return value

    def solver_config(self, **overrides):
        """从配置生成 SolverConfig，None 值的覆盖项被忽略"""
        from core.solver import SolverConfig

        params = dict(self.get("solver", {}))
        params.update({k: v for k, v in overrides.items() if v is not None})
        return SolverConfig(**params)
