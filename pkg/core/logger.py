# -*- coding: utf-8 -*-
"""
日志管理模块 - 支持日志轮转、分级记录

- 使用 RotatingFileHandler 实现日志轮转
- 控制台和文件双输出，错误单独落盘
- 日志目录可由 GMEB_LOG_DIR 指定，GMEB_LOG_FILES=0 关闭文件输出
- CLI 输出机器可读结果时控制台日志走 stderr
"""

import os
import sys
import logging
from logging.handlers import RotatingFileHandler
from typing import Optional


class LogManager:
    """日志管理器"""

    _instance = None
    _initialized = False

    # 日志级别映射
    LEVEL_MAP = {
        "DEBUG": logging.DEBUG,
        "INFO": logging.INFO,
        "WARNING": logging.WARNING,
        "ERROR": logging.ERROR,
        "CRITICAL": logging.CRITICAL
    }

    def __new__(cls, *args, **kwargs):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __init__(self, level: str = "INFO", stream=None):
        if self._initialized:
            return
        self._initialized = True

        self._log_dir = self._get_log_dir()
        self._log_file = os.path.join(self._log_dir, "gmeb.log") if self._log_dir else None
        self._error_file = os.path.join(self._log_dir, "error.log") if self._log_dir else None

        # 默认配置
        self._max_bytes = 5 * 1024 * 1024  # 5MB
        self._backup_count = 5
        self._console_level = self.LEVEL_MAP.get(str(level).upper(), logging.INFO)
        self._file_level = logging.DEBUG
        self._stream = stream if stream is not None else sys.stderr

        self._setup_logging()

    @classmethod
    def reset(cls) -> None:
        """移除根日志器上的处理器并丢弃单例"""
        root_logger = logging.getLogger()
        for handler in list(root_logger.handlers):
            root_logger.removeHandler(handler)
            handler.close()
        cls._instance = None
        cls._initialized = False

    def _get_log_dir(self) -> Optional[str]:
        """获取日志目录，关闭文件日志时返回 None"""
        if os.environ.get("GMEB_LOG_FILES", "1").strip() == "0":
            return None
        log_dir = os.environ.get("GMEB_LOG_DIR")
        if not log_dir:
            base_dir = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
            log_dir = os.path.join(base_dir, "logs")
        try:
            os.makedirs(log_dir, exist_ok=True)
        except OSError:
            return None
        return log_dir

    def _setup_logging(self):
        """配置日志系统"""
        root_logger = logging.getLogger()
        root_logger.setLevel(logging.DEBUG)
        root_logger.handlers.clear()

        detailed_format = logging.Formatter(
            '%(asctime)s | %(levelname)-8s | %(name)-20s | %(message)s',
            datefmt='%Y-%m-%d %H:%M:%S'
        )
        simple_format = logging.Formatter(
            '%(asctime)s | %(levelname)-8s | %(message)s',
            datefmt='%H:%M:%S'
        )

        console_handler = logging.StreamHandler(self._stream)
        console_handler.setLevel(self._console_level)
        console_handler.setFormatter(simple_format)
        root_logger.addHandler(console_handler)

        if self._log_file:
            try:
                file_handler = RotatingFileHandler(
                    self._log_file,
                    maxBytes=self._max_bytes,
                    backupCount=self._backup_count,
                    encoding='utf-8'
                )
                file_handler.setLevel(self._file_level)
                file_handler.setFormatter(detailed_format)
                root_logger.addHandler(file_handler)

                error_handler = RotatingFileHandler(
                    self._error_file,
                    maxBytes=self._max_bytes,
                    backupCount=self._backup_count,
                    encoding='utf-8'
                )
                error_handler.setLevel(logging.ERROR)
                error_handler.setFormatter(detailed_format)
                root_logger.addHandler(error_handler)
            except OSError:
                self._log_file = None
                self._error_file = None

        logging.debug("日志系统初始化完成，日志目录: %s", self._log_dir)

    def _is_console(self, handler: logging.Handler) -> bool:
        return isinstance(handler, logging.StreamHandler) and not isinstance(handler, RotatingFileHandler)

    def _is_main_file(self, handler: logging.Handler) -> bool:
        return isinstance(handler, RotatingFileHandler) and handler.baseFilename == self._log_file

    def set_level(self, level: str, target: str = "all"):
        """设置日志级别

        Args:
            level: 日志级别（DEBUG/INFO/WARNING/ERROR/CRITICAL）
            target: 目标（console/file/all）
        """
        log_level = self.LEVEL_MAP.get(level.upper(), logging.INFO)
        for handler in logging.getLogger().handlers:
            if target in ("all", "console") and self._is_console(handler):
                handler.setLevel(log_level)
            elif target in ("all", "file") and self._is_main_file(handler):
                handler.setLevel(log_level)

    @property
    def log_dir(self) -> Optional[str]:
        """获取日志目录"""
        return self._log_dir


def setup_logging(level: str = "INFO", stream=None) -> LogManager:
    """初始化日志系统（便捷函数）"""
    manager = LogManager(level, stream)
    manager.set_level(level, target="console")
    return manager
