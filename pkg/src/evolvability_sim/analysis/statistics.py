"""统计计算

种群均值、生态位均值、Pearson相关、多次运行汇总与配对检验。
所有函数都是输入的纯函数。
"""

import math
from dataclasses import asdict, dataclass
from typing import Any, Dict, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy import stats

from ..core.errors import EmptyInputError, ScheduleMismatchError
from .records import STATISTIC_COLUMNS, CheckpointRow, RunRecord


@dataclass(frozen=True)
class CorrelationResult:
    """Pearson相关结果

    方差为零时 ``defined`` 为False，数值字段为None。
    """

    n: int
    defined: bool
    r: Optional[float] = None
    p: Optional[float] = None
    slope: Optional[float] = None
    intercept: Optional[float] = None

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass(frozen=True)
class SignificanceResult:
    """单侧t检验结果"""

    n: int
    mean: float
    standard_error: float
    t: Optional[float]
    p_one_sided: Optional[float]

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def group_niches(niches: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """把生态位标签分组

    Args:
        niches: 一维整数标签，或形状为(n, 2)的格点坐标

    Returns:
        (唯一生态位, 每个个体所属组的下标)
    """
    niches = np.asarray(niches)
    if niches.ndim == 2:
        keys, inverse = np.unique(niches, axis=0, return_inverse=True)
    else:
        keys, inverse = np.unique(niches, return_inverse=True)
    return keys, np.asarray(inverse).reshape(-1)


def niche_means(
    niches: np.ndarray, evolvability: np.ndarray
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """每个被占据生态位内的平均演化能力

    Args:
        niches: 生态位标签
        evolvability: 演化能力

    Returns:
        (唯一生态位, 组内均值, 组内个体数)
    """
    values = np.asarray(evolvability, dtype=np.float64)
    if values.size == 0:
        raise EmptyInputError("种群快照为空")
    keys, inverse = group_niches(niches)
    counts = np.bincount(inverse, minlength=len(keys))
    sums = np.bincount(inverse, weights=values, minlength=len(keys))
    return keys, sums / counts, counts


def per_niche_mean(niches: np.ndarray, evolvability: np.ndarray) -> float:
    """先在生态位内平均、再在生态位间不加权平均

    Args:
        niches: 生态位标签
        evolvability: 演化能力

    Returns:
        生态位均值
    """
    _, means, _ = niche_means(niches, evolvability)
    return float(means.mean())


def summarize_snapshot(
    checkpoint: int,
    niches: np.ndarray,
    evolvability: np.ndarray,
    cumulative_individuals: int,
) -> CheckpointRow:
    """把一个种群快照汇总成检查点统计

    Args:
        checkpoint: 代数或评估次数
        niches: 生态位标签
        evolvability: 演化能力
        cumulative_individuals: 累计产生的个体数

    Returns:
        检查点统计
    """
    values = np.asarray(evolvability, dtype=np.float64)
    keys, means, _ = niche_means(niches, values)
    return CheckpointRow(
        checkpoint=int(checkpoint),
        pop_size=int(values.size),
        pop_mean_evolvability=float(values.mean()),
        niche_mean_evolvability=float(means.mean()),
        occupied_niches=int(len(keys)),
        cumulative_individuals=int(cumulative_individuals),
    )


def pearson(x: Sequence[float], y: Sequence[float]) -> CorrelationResult:
    """Pearson积矩相关、双侧显著性与最小二乘直线

    p值使用 t = r*sqrt((n-2)/(1-r^2)) 与自由度n-2的Student分布。

    Args:
        x: 自变量
        y: 因变量

    Returns:
        相关结果
    """
    xs = np.asarray(x, dtype=np.float64)
    ys = np.asarray(y, dtype=np.float64)
    if xs.shape != ys.shape or xs.ndim != 1:
        raise ValueError(f"x与y必须是等长一维序列: {xs.shape} vs {ys.shape}")
    n = xs.size
    if n < 3:
        raise ValueError(f"Pearson相关至少需要3个样本: {n}")

    dx = xs - xs.mean()
    dy = ys - ys.mean()
    sxx = float(np.dot(dx, dx))
    syy = float(np.dot(dy, dy))
    if sxx == 0.0 or syy == 0.0:
        return CorrelationResult(n=n, defined=False)

    sxy = float(np.dot(dx, dy))
    r = max(-1.0, min(1.0, sxy / math.sqrt(sxx * syy)))
    slope = sxy / sxx
    intercept = float(ys.mean() - slope * xs.mean())

    if abs(r) == 1.0:
        p = 0.0
    else:
        t = r * math.sqrt((n - 2) / (1.0 - r * r))
        p = float(min(1.0, 2.0 * stats.t.sf(abs(t), df=n - 2)))

    return CorrelationResult(n=n, defined=True, r=r, p=p, slope=slope, intercept=intercept)


def aggregate_runs(records: Sequence[RunRecord]) -> pd.DataFrame:
    """多次运行的逐检查点均值与标准误

    Args:
        records: 检查点序列相同的运行记录

    Returns:
        含 checkpoint、``<统计>_mean`` 与 ``<统计>_se`` 列的DataFrame
    """
    if not records:
        raise EmptyInputError("没有可汇总的运行记录")

    schedule = records[0].checkpoints
    for record in records[1:]:
        if record.checkpoints != schedule:
            raise ScheduleMismatchError(
                f"运行{record.run_index}的检查点序列与运行{records[0].run_index}不一致"
            )

    result = pd.DataFrame({"checkpoint": schedule})
    n = len(records)
    for name in STATISTIC_COLUMNS:
        matrix = np.vstack([record.column(name).astype(np.float64) for record in records])
        result[f"{name}_mean"] = matrix.mean(axis=0)
        if n > 1:
            result[f"{name}_se"] = matrix.std(axis=0, ddof=1) / math.sqrt(n)
        else:
            result[f"{name}_se"] = 0.0
    return result


def one_sample_test(values: Sequence[float], mu: float) -> SignificanceResult:
    """单样本单侧t检验（备择假设：均值大于mu）

    Args:
        values: 样本
        mu: 原假设均值

    Returns:
        检验结果；样本方差为零时t与p为None
    """
    data = np.asarray(values, dtype=np.float64)
    n = data.size
    if n < 2:
        raise ValueError("单样本检验至少需要2个样本")
    mean = float(data.mean())
    se = float(data.std(ddof=1) / math.sqrt(n))
    if se == 0.0:
        return SignificanceResult(n=n, mean=mean, standard_error=0.0, t=None, p_one_sided=None)
    t = (mean - mu) / se
    return SignificanceResult(
        n=n, mean=mean, standard_error=se, t=t, p_one_sided=float(stats.t.sf(t, df=n - 1))
    )


def paired_comparison(a: Sequence[float], b: Sequence[float]) -> SignificanceResult:
    """配对单侧t检验（备择假设：a大于b）

    Args:
        a: 第一组（如按行为划分生态位的结果）
        b: 配对的第二组（如随机对照）

    Returns:
        差值 a-b 的检验结果
    """
    xa = np.asarray(a, dtype=np.float64)
    xb = np.asarray(b, dtype=np.float64)
    if xa.shape != xb.shape:
        raise ValueError("配对样本长度必须一致")
    return one_sample_test(xa - xb, 0.0)
