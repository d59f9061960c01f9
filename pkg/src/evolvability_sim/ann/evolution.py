"""基于查找表的机器人演化

种群只保存基因型局部编号，生态位与演化能力都从查找表读取，因此每一代只需要
整数运算。
"""

from typing import Any, Mapping, Optional, Tuple, Union

import numpy as np

from ..abstract.dynamics import admit_offspring
from ..analysis.records import CheckpointRow, RunRecord, checkpoint_schedule
from ..analysis.statistics import CorrelationResult, pearson, summarize_snapshot
from ..config.settings import RobotDriftParams, coerce_params
from ..core.errors import ConfigurationError, EvolvabilitySimError
from ..core.logger import get_logger
from ..harness.seeds import seed_stream
from .table import LookupTable

logger = get_logger(__name__)


def heritability(
    table: LookupTable, sample_size: int, rng: Optional[np.random.Generator] = None
) -> CorrelationResult:
    """亲代与单连接突变后代之间的演化能力相关

    Args:
        table: 完整的查找表
        sample_size: 亲代样本数（至少3）
        rng: 随机流，默认使用种子0

    Returns:
        相关结果；方差为零时标记为未定义
    """
    if sample_size < 3:
        raise ConfigurationError(f"sample_size至少为3: {sample_size}")
    rng = rng if rng is not None else seed_stream(0)
    parents = rng.integers(0, table.size, size=sample_size)
    offspring = table.space.random_neighbor(parents, rng)
    return pearson(
        table.evolvability_of(parents).astype(np.float64),
        table.evolvability_of(offspring).astype(np.float64),
    )


def mutate_population(
    ids: np.ndarray, table: LookupTable, probability: float, rng: np.random.Generator
) -> np.ndarray:
    """每个后代以给定概率发生一次均匀的单连接突变"""
    mutate = rng.random(ids.size) < probability
    out = ids.copy()
    idx = np.flatnonzero(mutate)
    out[idx] = table.space.random_neighbor(ids[idx], rng)
    return out


def _snapshot(
    table: LookupTable, ids: np.ndarray, checkpoint: int, cumulative: int
) -> CheckpointRow:
    return summarize_snapshot(
        checkpoint,
        table.niche_of(ids),
        table.evolvability_of(ids).astype(np.float64),
        cumulative,
    )


def run_robot_drift(
    table: LookupTable,
    params: Union[RobotDriftParams, Mapping[str, Any], None],
    seed: int,
    run_index: int = 0,
    checkpoint_every: int = 1,
) -> Tuple[RunRecord, np.ndarray]:
    """被动漂移：pop_size个相同的随机基因型，每个个体每代留下一个后代

    Args:
        table: 查找表
        params: 模型参数
        seed: 基础种子
        run_index: 运行序号
        checkpoint_every: 记录频率（代）

    Returns:
        (运行记录, 最终种群的局部编号)
    """
    params = coerce_params(RobotDriftParams, params)
    rng = seed_stream(seed, run_index)
    schedule = set(checkpoint_schedule(params.generations, checkpoint_every))

    founder = int(rng.integers(0, table.size))
    ids = np.full(params.pop_size, founder, dtype=np.int64)
    cumulative = ids.size

    record = RunRecord(
        model="robot-drift",
        seed=seed + run_index,
        run_index=run_index,
        metadata={"founder": founder, "mask": table.space.mask},
    )
    record.append(_snapshot(table, ids, 0, cumulative))

    for generation in range(1, params.generations + 1):
        ids = mutate_population(ids, table, params.offspring_mutation_prob, rng)
        cumulative += ids.size
        if generation in schedule:
            record.append(_snapshot(table, ids, generation, cumulative))

    logger.debug("robot_drift_finished", run_index=run_index, founder=founder)
    return record, ids


def run_robot_niched(
    table: LookupTable,
    params: Union[RobotDriftParams, Mapping[str, Any], None],
    seed: int,
    run_index: int = 0,
    checkpoint_every: int = 1,
) -> Tuple[RunRecord, np.ndarray]:
    """有限容量生态位：从单个随机基因型开始的世代更替与随机接纳

    Args:
        table: 查找表
        params: 模型参数
        seed: 基础种子
        run_index: 运行序号
        checkpoint_every: 记录频率（代）

    Returns:
        (运行记录, 最终种群的局部编号)
    """
    params = coerce_params(RobotDriftParams, params)
    rng = seed_stream(seed, run_index)
    schedule = set(checkpoint_schedule(params.generations, checkpoint_every))

    founder = int(rng.integers(0, table.size))
    ids = np.array([founder], dtype=np.int64)
    cumulative = 1

    record = RunRecord(
        model="robot-niched",
        seed=seed + run_index,
        run_index=run_index,
        metadata={"founder": founder, "mask": table.space.mask},
    )
    record.append(_snapshot(table, ids, 0, cumulative))

    for generation in range(1, params.generations + 1):
        offspring = mutate_population(
            np.repeat(ids, params.offspring_per_parent),
            table,
            params.offspring_mutation_prob,
            rng,
        )
        cumulative += offspring.size
        niches = table.niche_of(offspring).astype(np.int64)
        ids = offspring[admit_offspring(niches, params.niche_capacity, rng)]

        occupancy = np.bincount(table.niche_of(ids).astype(np.int64))
        if occupancy.max() > params.niche_capacity:
            raise EvolvabilitySimError(f"第{generation}代有生态位超出容量{params.niche_capacity}")

        if generation in schedule:
            record.append(_snapshot(table, ids, generation, cumulative))

    record.metadata["final_pop_size"] = int(ids.size)
    logger.debug(
        "robot_niched_finished",
        run_index=run_index,
        pop_size=int(ids.size),
        cumulative_individuals=cumulative,
    )
    return record, ids
