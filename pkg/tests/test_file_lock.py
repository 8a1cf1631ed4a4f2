# -*- coding: utf-8 -*-
"""文件锁与原子写入测试"""

import os
from concurrent.futures import ThreadPoolExecutor

import pytest

from core.file_lock import FileLock, atomic_write


def test_atomic_write_replaces_target(tmp_path):
    path = tmp_path / "sub" / "out.txt"
    with atomic_write(str(path)) as f:
        f.write("第一版\n")
    with atomic_write(str(path)) as f:
        f.write("第二版\n")
    assert path.read_text(encoding="utf-8") == "第二版\n"
    assert sorted(os.listdir(path.parent)) == ["out.txt"]


def test_failed_write_keeps_old_content(tmp_path):
    path = tmp_path / "out.txt"
    path.write_text("原内容", encoding="utf-8")
    with pytest.raises(RuntimeError):
        with atomic_write(str(path)) as f:
            f.write("半截")
            raise RuntimeError("中断")
    assert path.read_text(encoding="utf-8") == "原内容"
    assert sorted(os.listdir(tmp_path)) == ["out.txt"]


def test_lock_times_out_while_held(tmp_path):
    target = str(tmp_path / "res.csv")
    with FileLock(target):
        other = FileLock(target, timeout=0.1)
        assert other.acquire() is False
    assert not os.path.exists(target + ".lock")


def test_concurrent_writers_leave_one_complete_file(tmp_path):
    path = str(tmp_path / "shared.txt")

    def write(i):
        with atomic_write(path) as f:
            f.write(f"{i}\n" * 100)

    with ThreadPoolExecutor(max_workers=4) as pool:
        list(pool.map(write, range(8)))
    lines = open(path, encoding="utf-8").read().splitlines()
    assert len(lines) == 100 and len(set(lines)) == 1
