# -*- coding: utf-8 -*-
"""异常与退出码测试"""

import pytest

from core.exceptions import (
    EXIT_CONFIG,
    EXIT_NUMERICAL,
    DimensionMismatch,
    GmebError,
    GmebWarning,
    InvalidConfig,
    NegativeEigenvaluesDominantWarning,
    ParseError,
    RankDeficient,
    SchemaError,
    TooFewValues,
)


@pytest.mark.parametrize("error, code", [
    (InvalidConfig("x"), EXIT_CONFIG),
    (ParseError("x", 3), EXIT_CONFIG),
    (SchemaError("x"), EXIT_CONFIG),
    (DimensionMismatch("x"), EXIT_NUMERICAL),
    (TooFewValues("x"), EXIT_NUMERICAL),
])
def test_exit_codes(error, code):
    assert isinstance(error, GmebError)
    assert error.exit_code == code


def test_explicit_exit_code():
    assert GmebError("x", exit_code=EXIT_CONFIG).exit_code == EXIT_CONFIG


def test_parse_error_without_line():
    assert str(ParseError("空")) == "空"


def test_rank_deficient_carries_ranks():
    error = RankDeficient("秩不足", rank=1, expected=3)
    assert (error.rank, error.expected) == (1, 3)


def test_warning_category():
    assert issubclass(NegativeEigenvaluesDominantWarning, GmebWarning)
    assert issubclass(GmebWarning, RuntimeWarning)
