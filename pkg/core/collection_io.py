# -*- coding: utf-8 -*-
"""
文件读写模块

- .gss 集合文件（文本）：第 1 行 "n M"，随后每个样本一行 p_i，接 n 行、每行 p_i 个浮点数
- 求解结果 JSON、真值旁注 JSON、阶数报告 JSON
- 试验 CSV（表头 + 每条记录一行）

浮点数按 17 位有效数字写出，读回逐位一致。所有写入经 atomic_write。
"""

import csv
import json
import logging
import math
from typing import Any, Iterable, List, Optional, Sequence

import numpy as np

from core.exceptions import ParseError, SchemaError
from core.file_lock import atomic_write
from core.grassmann import Basis, SubspaceCollection
from core.validators import Validators

logger = logging.getLogger(__name__)

FLOAT_FORMAT = ".17g"
RESULT_KEYS = ("k", "lambda", "center", "primal_cost", "dual_cost", "duality_gap",
               "iterations", "converged_reason", "trace")
TRACE_KEYS = ("t", "primal", "dual", "step")


def _fmt(value: float) -> str:
    return format(float(value), FLOAT_FORMAT)


# ---------------------------------------------------------------- .gss

def format_collection(collection: SubspaceCollection) -> str:
    lines = [f"{collection.n} {len(collection)}"]
    for item in collection:
        lines.append(str(item.p))
        lines.extend(" ".join(_fmt(v) for v in row) for row in item.columns)
    return "\n".join(lines) + "\n"


def write_collection(path: str, collection: SubspaceCollection) -> None:
    with atomic_write(path) as f:
        f.write(format_collection(collection))
    logger.info("写出集合文件 %s (n=%d, M=%d)", path, collection.n, len(collection))


def _content_lines(text: str):
    """(行号, 内容)，跳过空行与 # 注释"""
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if line and not line.startswith("#"):
            yield number, line


def _ints(line: str, count: int, number: int, what: str) -> List[int]:
    parts = line.split()
    if len(parts) != count:
        raise ParseError(f"{what}应包含 {count} 个整数，实际为 {len(parts)} 个", number)
    try:
        return [int(p) for p in parts]
    except ValueError:
        raise ParseError(f"{what}不是整数: {line!r}", number) from None


def parse_collection(text: str) -> SubspaceCollection:
    """解析 .gss 文本

    Raises:
        ParseError: 格式错误或基矩阵不正交，消息带行号
    """
    lines = iter(_content_lines(text))
    header = next(lines, None)
    if header is None:
        raise ParseError("文件为空，缺少表头 'n M'", 1)
    number, line = header
    n, m = _ints(line, 2, number, "表头")
    if n < 1 or m < 1:
        raise ParseError(f"表头要求 n >= 1 且 M >= 1，当前 n={n}, M={m}", number)

    items = []
    for index in range(m):
        entry = next(lines, None)
        if entry is None:
            raise ParseError(f"文件提前结束，缺少第 {index + 1} 个子空间", number + 1)
        number, line = entry
        (p,) = _ints(line, 1, number, "子空间维度")
        if not 1 <= p <= n:
            raise ParseError(f"子空间维度 p={p} 不在 [1, {n}] 内", number)
        header_line = number
        rows = []
        for _ in range(n):
            entry = next(lines, None)
            if entry is None:
                raise ParseError(f"第 {index + 1} 个子空间的矩阵行数不足 {n}", number + 1)
            number, line = entry
            parts = line.split()
            if len(parts) != p:
                raise ParseError(f"矩阵行应包含 {p} 个数，实际为 {len(parts)} 个", number)
            try:
                rows.append([float(v) for v in parts])
            except ValueError:
                raise ParseError(f"矩阵行包含非数字: {line!r}", number) from None
        matrix = np.array(rows)
        check = Validators.validate_basis_matrix(matrix)
        if not check.valid:
            raise ParseError(f"第 {index + 1} 个子空间: {check.error}", header_line)
        items.append(Basis(matrix, check=False))

    extra = next(lines, None)
    if extra is not None:
        raise ParseError("表头声明的子空间之后还有多余内容", extra[0])
    return SubspaceCollection(items)


def read_collection(path: str) -> SubspaceCollection:
    with open(path, "r", encoding="utf-8") as f:
        collection = parse_collection(f.read())
    logger.info("读取集合文件 %s (n=%d, M=%d, dims=%s)", path, collection.n, len(collection),
                sorted(set(collection.dims)))
    return collection


# ---------------------------------------------------------------- JSON

def _finite_or_none(value: Any) -> Any:
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


def _sanitize(data: Any) -> Any:
    """NaN/Inf 写成 null，numpy 标量转为 Python 类型"""
    if isinstance(data, dict):
        return {k: _sanitize(v) for k, v in data.items()}
    if isinstance(data, (list, tuple)):
        return [_sanitize(v) for v in data]
    if isinstance(data, np.ndarray):
        return _sanitize(data.tolist())
    if isinstance(data, np.generic):
        return _sanitize(data.item())
    return _finite_or_none(data)


def write_json(path: str, data: Any) -> None:
    with atomic_write(path) as f:
        json.dump(_sanitize(data), f, ensure_ascii=False, indent=2)
        f.write("\n")


def dumps(data: Any) -> str:
    return json.dumps(_sanitize(data), ensure_ascii=False, indent=2)


def read_json(path: str) -> Any:
    try:
        with open(path, "r", encoding="utf-8") as f:
            return json.load(f)
    except json.JSONDecodeError as e:
        raise SchemaError(f"{path} 不是有效的 JSON: {e}") from e


def validate_result(data: Any) -> dict:
    """检查求解结果 JSON 的结构

    Raises:
        SchemaError: 缺少键或类型不符
    """
    if not isinstance(data, dict):
        raise SchemaError("求解结果必须是 JSON 对象")
    missing = [key for key in RESULT_KEYS if key not in data]
    if missing:
        raise SchemaError(f"求解结果缺少键: {', '.join(missing)}")
    if data["lambda"] is not None and not isinstance(data["lambda"], list):
        raise SchemaError("lambda 必须是数组")
    center = data["center"]
    if center is not None:
        if not isinstance(center, dict) or not {"n", "k", "rows"} <= set(center):
            raise SchemaError("center 必须包含 n, k, rows")
        rows = center["rows"]
        if len(rows) != center["n"] or any(len(row) != center["k"] for row in rows):
            raise SchemaError("center.rows 的形状与 n, k 不一致")
    if not isinstance(data["trace"], list):
        raise SchemaError("trace 必须是数组")
    for entry in data["trace"]:
        if not isinstance(entry, dict) or not set(TRACE_KEYS) <= set(entry):
            raise SchemaError(f"trace 条目必须包含 {', '.join(TRACE_KEYS)}")
    return data


def read_result(path: str) -> dict:
    return validate_result(read_json(path))


def read_weights(path: str) -> List[float]:
    """读取初始对偶权重：求解结果 JSON（取 lambda）或纯数组"""
    data = read_json(path)
    if isinstance(data, dict):
        data = validate_result(data)["lambda"]
    if not isinstance(data, list) or not data:
        raise SchemaError(f"{path} 中没有可用的对偶权重数组")
    try:
        return [float(v) for v in data]
    except (TypeError, ValueError):
        raise SchemaError(f"{path} 中的权重不是数字") from None


def center_from_dict(data: Optional[dict]) -> Optional[Basis]:
    if data is None:
        return None
    try:
        return Basis(np.array(data["rows"], dtype=float))
    except (KeyError, TypeError, ValueError) as e:
        raise SchemaError(f"中心矩阵无效: {e}") from e


def write_truth(path: str, dataset) -> None:
    """真值旁注：truth_k、truth_center（行优先）、生成规格、样本来源"""
    center = dataset.truth_center
    write_json(path, {
        "truth_k": dataset.truth_k,
        "truth_center": None if center is None else {
            "n": center.n, "k": center.p, "rows": center.columns.tolist(),
        },
        "spec": dataset.spec.to_dict() if dataset.spec is not None else None,
        "provenance": [p.value for p in dataset.provenance],
    })


def read_truth(path: str) -> dict:
    data = read_json(path)
    if not isinstance(data, dict) or "truth_k" not in data or "truth_center" not in data:
        raise SchemaError("真值文件必须包含 truth_k 与 truth_center")
    data["truth_center"] = center_from_dict(data["truth_center"])
    return data


# ---------------------------------------------------------------- CSV

def write_csv(path: str, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> int:
    """写 CSV，返回数据行数"""
    count = 0
    with atomic_write(path) as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) if isinstance(v, (float, np.floating)) else v for v in row])
            count += 1
    logger.info("写出 CSV %s (%d 行)", path, count)
    return count


def read_csv(path: str) -> List[dict]:
    with open(path, "r", encoding="utf-8", newline="") as f:
        return list(csv.DictReader(f))
