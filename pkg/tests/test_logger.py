# -*- coding: utf-8 -*-
"""日志系统测试"""

import io
import logging
import os

from core.logger import LogManager, setup_logging


def test_console_goes_to_given_stream():
    stream = io.StringIO()
    setup_logging("INFO", stream)
    logging.getLogger("core.solver").info("求解完成")
    logging.getLogger("core.solver").debug("细节")
    text = stream.getvalue()
    assert "求解完成" in text
    assert "细节" not in text


def test_singleton_and_level_change():
    stream = io.StringIO()
    manager = setup_logging("WARNING", stream)
    assert setup_logging("DEBUG") is manager
    logging.getLogger("gmeb").debug("可见")
    assert "可见" in stream.getvalue()


def test_file_output_can_be_disabled():
    assert setup_logging("INFO", io.StringIO()).log_dir is None


def test_log_files(tmp_path, monkeypatch):
    monkeypatch.setenv("GMEB_LOG_FILES", "1")
    monkeypatch.setenv("GMEB_LOG_DIR", str(tmp_path / "logs"))
    manager = setup_logging("INFO", io.StringIO())
    logging.getLogger("core.experiments").error("试验失败")
    for handler in logging.getLogger().handlers:
        handler.flush()
    assert manager.log_dir == str(tmp_path / "logs")
    with open(os.path.join(manager.log_dir, "gmeb.log"), encoding="utf-8") as f:
        assert "试验失败" in f.read()
    with open(os.path.join(manager.log_dir, "error.log"), encoding="utf-8") as f:
        assert "core.experiments" in f.read()


def test_reset_removes_handlers():
    setup_logging("INFO", io.StringIO())
    LogManager.reset()
    assert logging.getLogger().handlers == []
