"""分析模块

演化能力时间序列、生态位热图、距离相关与多次运行汇总。
"""

from .niches import (
    DistanceProfile,
    Heatmap,
    cell_to_xy,
    distance_profile,
    heatmap,
    niche_distances,
    robot_heatmap,
)
from .records import RECORD_COLUMNS, CheckpointRow, RunRecord, checkpoint_schedule
from .statistics import (
    CorrelationResult,
    SignificanceResult,
    aggregate_runs,
    group_niches,
    niche_means,
    one_sample_test,
    paired_comparison,
    pearson,
    per_niche_mean,
    summarize_snapshot,
)

__all__ = [
    "RECORD_COLUMNS",
    "CheckpointRow",
    "CorrelationResult",
    "DistanceProfile",
    "Heatmap",
    "RunRecord",
    "SignificanceResult",
    "aggregate_runs",
    "checkpoint_schedule",
    "cell_to_xy",
    "distance_profile",
    "group_niches",
    "heatmap",
    "niche_distances",
    "niche_means",
    "one_sample_test",
    "paired_comparison",
    "pearson",
    "per_niche_mean",
    "robot_heatmap",
    "summarize_snapshot",
]
