"""运行记录

每次仿真按检查点输出的统计数据流。
"""

import math
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List, Optional

import numpy as np
import pandas as pd

RECORD_COLUMNS = (
    "checkpoint",
    "pop_size",
    "pop_mean_evolvability",
    "niche_mean_evolvability",
    "occupied_niches",
    "cumulative_individuals",
)

STATISTIC_COLUMNS = RECORD_COLUMNS[1:]


@dataclass(frozen=True)
class CheckpointRow:
    """单个检查点的统计"""

    checkpoint: int
    pop_size: int
    pop_mean_evolvability: float
    niche_mean_evolvability: float
    occupied_niches: int
    cumulative_individuals: int


@dataclass
class RunRecord:
    """一次运行的检查点统计序列"""

    model: str
    seed: int
    run_index: int = 0
    rows: List[CheckpointRow] = field(default_factory=list)
    metadata: Dict[str, Any] = field(default_factory=dict)

    def append(self, row: CheckpointRow) -> None:
        """追加检查点

        Args:
            row: 检查点统计

        Raises:
            ValueError: 检查点不严格递增或均值不是有限数
        """
        if self.rows and row.checkpoint <= self.rows[-1].checkpoint:
            raise ValueError(
                f"检查点必须严格递增: {row.checkpoint} <= {self.rows[-1].checkpoint}"
            )
        if not (
            math.isfinite(row.pop_mean_evolvability)
            and math.isfinite(row.niche_mean_evolvability)
        ):
            raise ValueError(f"检查点{row.checkpoint}的均值不是有限数")
        if row.occupied_niches < 1:
            raise ValueError(f"检查点{row.checkpoint}没有被占据的生态位")
        self.rows.append(row)

    @property
    def checkpoints(self) -> List[int]:
        return [row.checkpoint for row in self.rows]

    def final(self) -> CheckpointRow:
        """最后一个检查点"""
        if not self.rows:
            raise IndexError("运行记录为空")
        return self.rows[-1]

    def column(self, name: str) -> np.ndarray:
        """按列取出统计值

        Args:
            name: 列名

        Returns:
            该列的数组
        """
        if name not in RECORD_COLUMNS:
            raise KeyError(f"未知的列: {name}")
        return np.array([getattr(row, name) for row in self.rows])

    def to_frame(self) -> pd.DataFrame:
        """转换为DataFrame（列顺序固定）"""
        return pd.DataFrame([asdict(row) for row in self.rows], columns=list(RECORD_COLUMNS))

    @classmethod
    def from_frame(
        cls,
        frame: pd.DataFrame,
        model: str = "unknown",
        seed: int = 0,
        run_index: int = 0,
        metadata: Optional[Dict[str, Any]] = None,
    ) -> "RunRecord":
        """从DataFrame恢复运行记录

        Args:
            frame: 含固定列的DataFrame
            model: 模型名称
            seed: 运行种子标识
            run_index: 运行序号
            metadata: 附加信息

        Returns:
            运行记录
        """
        missing = [c for c in RECORD_COLUMNS if c not in frame.columns]
        if missing:
            raise ValueError(f"缺少列: {missing}")

        record = cls(model=model, seed=seed, run_index=run_index, metadata=dict(metadata or {}))
        for item in frame.itertuples(index=False):
            record.append(
                CheckpointRow(
                    checkpoint=int(item.checkpoint),
                    pop_size=int(item.pop_size),
                    pop_mean_evolvability=float(item.pop_mean_evolvability),
                    niche_mean_evolvability=float(item.niche_mean_evolvability),
                    occupied_niches=int(item.occupied_niches),
                    cumulative_individuals=int(item.cumulative_individuals),
                )
            )
        return record


def checkpoint_schedule(final: int, every: int, first: int = 0) -> List[int]:
    """检查点序列：起点、每个频率倍数、以及终点

    Args:
        final: 最后一个检查点（代数或评估次数）
        every: 记录频率
        first: 起始检查点

    Returns:
        严格递增的检查点列表
    """
    if every < 1:
        raise ValueError(f"记录频率必须大于0: {every}")
    if final < first:
        raise ValueError(f"终点不能早于起点: {final} < {first}")
    points = [first]
    points.extend(range((first // every + 1) * every, final + 1, every))
    if points[-1] != final:
        points.append(final)
    return points
