# -*- coding: utf-8 -*-
"""
文件锁模块 - 跨平台文件锁与原子写入

并行试验可能同时写同一个结果目录，设置文件与结果文件都经由这里写出。
"""

import os
import time
import logging
import tempfile
from contextlib import contextmanager
from typing import Iterator, Optional

logger = logging.getLogger(__name__)

if os.name == 'nt':
    import msvcrt

    def _try_lock(fd: int) -> None:
        msvcrt.locking(fd, msvcrt.LK_NBLCK, 1)

    def _unlock(fd: int) -> None:
        msvcrt.locking(fd, msvcrt.LK_UNLCK, 1)
else:
    import fcntl

    def _try_lock(fd: int) -> None:
        fcntl.flock(fd, fcntl.LOCK_EX | fcntl.LOCK_NB)

    def _unlock(fd: int) -> None:
        fcntl.flock(fd, fcntl.LOCK_UN)


class FileLock:
    """基于 <path>.lock 的排他锁"""

    def __init__(self, filepath: str, timeout: float = 10.0):
        self.filepath = filepath
        self.timeout = timeout
        self.lockfile = filepath + '.lock'
        self.fd: Optional[int] = None

    def acquire(self) -> bool:
        """获取锁，超时返回 False"""
        start_time = time.monotonic()

        while True:
            try:
                self.fd = os.open(self.lockfile, os.O_CREAT | os.O_RDWR)
                _try_lock(self.fd)
                logger.debug("获取文件锁成功: %s", self.lockfile)
                return True
            except OSError:
                if self.fd is not None:
                    os.close(self.fd)
                    self.fd = None
                if time.monotonic() - start_time >= self.timeout:
                    logger.warning("获取文件锁超时: %s", self.lockfile)
                    return False
                time.sleep(0.05)

    def release(self):
        """释放锁"""
        if self.fd is None:
            return
        try:
            _unlock(self.fd)
            os.close(self.fd)
            self.fd = None
            if os.path.exists(self.lockfile):
                os.remove(self.lockfile)
            logger.debug("释放文件锁成功: %s", self.lockfile)
        except OSError:
            logger.exception("释放文件锁失败: %s", self.lockfile)

    def __enter__(self):
        if not self.acquire():
            raise TimeoutError(f"无法获取文件锁: {self.lockfile}")
        return self

    def __exit__(self, exc_type, exc_val, exc_tb):
        self.release()


@contextmanager
def atomic_write(filepath: str, timeout: float = 10.0, encoding: str = "utf-8") -> Iterator:
    """加锁后写临时文件，成功时替换目标文件

    用法:
        with atomic_write(path) as f:
            f.write(text)
    """
    directory = os.path.dirname(os.path.abspath(filepath))
    os.makedirs(directory, exist_ok=True)

    with FileLock(filepath, timeout):
        fd, tmp_path = tempfile.mkstemp(prefix=".tmp_", dir=directory)
        try:
            with os.fdopen(fd, "w", encoding=encoding, newline="") as f:
                yield f
            os.replace(tmp_path, filepath)
        except BaseException:
            if os.path.exists(tmp_path):
                os.remove(tmp_path)
            raise
