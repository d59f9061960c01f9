"""生态位空间分析

距离剖面与演化能力热图。
"""

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
import pandas as pd

from ..config.settings import DistanceMetric
from ..core.errors import EmptyInputError
from .statistics import CorrelationResult, niche_means, pearson

ROBOT_GRID = 20


@dataclass(frozen=True)
class DistanceProfile:
    """距离剖面：按取整距离分箱的平均演化能力与未分箱的相关结果"""

    bins: pd.DataFrame
    correlation: Optional[CorrelationResult]


@dataclass(frozen=True)
class Heatmap:
    """生态位热图

    ``matrix[row, col]`` 对应格点 (origin_x + col, origin_y + row)；
    未被占据的格子为NaN（缺失），不与演化能力0混淆。
    """

    matrix: np.ndarray
    origin: Tuple[int, int]

    @property
    def shape(self) -> Tuple[int, int]:
        return self.matrix.shape  # type: ignore[return-value]


def niche_distances(
    points: np.ndarray,
    origin: Tuple[int, int] = (0, 0),
    metric: DistanceMetric = DistanceMetric.EUCLIDEAN,
) -> np.ndarray:
    """每个格点到起始生态位的距离

    Args:
        points: 形状为(n, 2)的格点
        origin: 起始生态位
        metric: 距离度量

    Returns:
        距离数组
    """
    delta = np.asarray(points, dtype=np.float64) - np.asarray(origin, dtype=np.float64)
    if metric == DistanceMetric.MANHATTAN:
        return np.abs(delta).sum(axis=1)
    return np.hypot(delta[:, 0], delta[:, 1])


def distance_profile(
    points: np.ndarray,
    evolvability: np.ndarray,
    origin: Tuple[int, int] = (0, 0),
    metric: DistanceMetric = DistanceMetric.EUCLIDEAN,
) -> DistanceProfile:
    """演化能力随与起始生态位距离的变化

    Args:
        points: 汇总后的最终个体格点，形状(n, 2)
        evolvability: 对应的演化能力
        origin: 起始生态位
        metric: 距离度量

    Returns:
        距离剖面；样本少于3个时相关结果为None
    """
    values = np.asarray(evolvability, dtype=np.float64)
    if values.size == 0:
        raise EmptyInputError("个体池为空")

    distances = niche_distances(points, origin, metric)
    bins = np.rint(distances).astype(np.int64)
    frame = (
        pd.DataFrame({"distance": bins, "evolvability": values})
        .groupby("distance", sort=True)["evolvability"]
        .agg(["mean", "count"])
        .reset_index()
        .rename(columns={"mean": "mean_evolvability", "count": "count"})
    )

    correlation = pearson(distances, values) if values.size >= 3 else None
    return DistanceProfile(bins=frame, correlation=correlation)


def heatmap(
    points: np.ndarray,
    evolvability: np.ndarray,
    grid_shape: Optional[Tuple[int, int]] = None,
) -> Heatmap:
    """每个生态位的平均演化能力矩阵

    Args:
        points: 汇总后的最终个体格点，形状(n, 2)，为(x, y)
        evolvability: 对应的演化能力
        grid_shape: 固定网格(宽, 高)，原点为(0, 0)；为None时使用被占据区域的包围盒

    Returns:
        热图
    """
    pts = np.asarray(points, dtype=np.int64).reshape(-1, 2)
    values = np.asarray(evolvability, dtype=np.float64)
    if values.size == 0:
        width, height = grid_shape or (0, 0)
        return Heatmap(matrix=np.full((height, width), np.nan), origin=(0, 0))

    keys, means, _ = niche_means(pts, values)

    if grid_shape is None:
        x0, y0 = int(keys[:, 0].min()), int(keys[:, 1].min())
        width = int(keys[:, 0].max()) - x0 + 1
        height = int(keys[:, 1].max()) - y0 + 1
    else:
        x0, y0 = 0, 0
        width, height = grid_shape

    matrix = np.full((height, width), np.nan)
    matrix[keys[:, 1] - y0, keys[:, 0] - x0] = means
    return Heatmap(matrix=matrix, origin=(x0, y0))


def cell_to_xy(cells: np.ndarray, grid: int = ROBOT_GRID) -> np.ndarray:
    """把机器人网格的格子编号转换为(x, y)坐标

    Args:
        cells: 格子编号（cell = y * grid + x）
        grid: 网格边长

    Returns:
        形状(n, 2)的坐标
    """
    cells = np.asarray(cells, dtype=np.int64)
    return np.stack([cells % grid, cells // grid], axis=1)


def robot_heatmap(cells: np.ndarray, evolvability: np.ndarray) -> Heatmap:
    """机器人模型的20×20固定网格热图"""
    return heatmap(cell_to_xy(cells), evolvability, grid_shape=(ROBOT_GRID, ROBOT_GRID))
