"""结果导出

CSV时间序列、热图矩阵与相关结果摘要的读写。
"""

from pathlib import Path
from typing import Any, Dict, Optional, Union

import numpy as np
import orjson
import pandas as pd

from .niches import DistanceProfile, Heatmap
from .records import RECORD_COLUMNS, RunRecord
from .statistics import CorrelationResult

PathLike = Union[str, Path]


def _prepare(path: PathLike) -> Path:
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    return target


def write_run_record(record: RunRecord, path: PathLike) -> Path:
    """写出一次运行的时间序列CSV

    Args:
        record: 运行记录
        path: 输出路径

    Returns:
        输出路径
    """
    target = _prepare(path)
    record.to_frame().to_csv(target, index=False, lineterminator="\n")
    return target


def read_run_record(
    path: PathLike, model: str = "unknown", seed: int = 0, run_index: int = 0
) -> RunRecord:
    """读取时间序列CSV

    Args:
        path: CSV路径
        model: 模型名称
        seed: 运行种子标识
        run_index: 运行序号

    Returns:
        运行记录
    """
    frame = pd.read_csv(path)
    if list(frame.columns) != list(RECORD_COLUMNS):
        raise ValueError(f"时间序列文件的表头不正确: {path}")
    return RunRecord.from_frame(frame, model=model, seed=seed, run_index=run_index)


def write_frame(frame: pd.DataFrame, path: PathLike) -> Path:
    """写出普通表格（汇总序列、距离剖面）"""
    target = _prepare(path)
    frame.to_csv(target, index=False, lineterminator="\n")
    return target


def write_heatmap(result: Heatmap, path: PathLike) -> Path:
    """写出热图矩阵

    第一行是包围盒原点 ``origin,<x0>,<y0>``，之后每行对应一个y，缺失格子写作NA。

    Args:
        result: 热图
        path: 输出路径

    Returns:
        输出路径
    """
    target = _prepare(path)
    frame = pd.DataFrame(result.matrix)
    body = frame.to_csv(index=False, header=False, na_rep="NA", lineterminator="\n")
    x0, y0 = result.origin
    target.write_text(f"origin,{x0},{y0}\n{body}", encoding="utf-8")
    return target


def read_heatmap(path: PathLike) -> Heatmap:
    """读取热图矩阵"""
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    tag, x0, y0 = lines[0].split(",")
    if tag != "origin":
        raise ValueError(f"热图文件缺少原点行: {path}")
    rows = [
        [np.nan if cell == "NA" else float(cell) for cell in line.split(",")]
        for line in lines[1:]
        if line
    ]
    return Heatmap(matrix=np.array(rows, dtype=np.float64), origin=(int(x0), int(y0)))


def write_correlation(
    result: Optional[CorrelationResult],
    path: PathLike,
    extra: Optional[Dict[str, Any]] = None,
) -> Path:
    """写出相关结果摘要（JSON）

    Args:
        result: 相关结果，None表示样本不足
        path: 输出路径
        extra: 附加字段

    Returns:
        输出路径
    """
    target = _prepare(path)
    payload: Dict[str, Any] = result.to_dict() if result is not None else {"defined": False}
    payload.update(extra or {})
    target.write_bytes(orjson.dumps(payload, option=orjson.OPT_SORT_KEYS | orjson.OPT_INDENT_2))
    return target


def write_distance_profile(
    profile: DistanceProfile, directory: PathLike, stem: str
) -> Dict[str, Path]:
    """写出距离剖面及其相关摘要

    Args:
        profile: 距离剖面
        directory: 输出目录
        stem: 文件名前缀

    Returns:
        写出的文件
    """
    base = Path(directory)
    return {
        "profile": write_frame(profile.bins, base / f"{stem}.csv"),
        "correlation": write_correlation(profile.correlation, base / f"{stem}_correlation.json"),
    }
