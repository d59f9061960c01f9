"""实用模型：基于行为的有限容量生态位稳态演化

没有任何适应度。每次迭代均匀挑选一个存活个体，产生一个变异后代并评估，
若其生态位未满则接纳，否则丢弃。随机对照模式下生态位由随机数决定，与行为无关。
"""

from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
import orjson

from ..analysis.niches import ROBOT_GRID
from ..analysis.records import RunRecord, checkpoint_schedule
from ..analysis.statistics import summarize_snapshot
from ..config.settings import ControlMode, NeatParams, RobotParams, coerce_params
from ..core.logger import get_logger
from ..harness.seeds import seed_stream
from ..maze.geometry import Maze
from ..maze.robot import niche_cells, simulate_batch
from .genome import InnovationTracker, NeatGenome, initial_genome
from .mutation import mutate_neat
from .network import NeatBatch

logger = get_logger(__name__)

N_CELLS = ROBOT_GRID * ROBOT_GRID


@dataclass(frozen=True)
class NeatIndividual:
    """种群中的个体

    Attributes:
        genome: 基因组
        niche: 所占据的生态位（随机对照模式下为随机格子）
        cell: 行为格子
    """

    genome: NeatGenome
    niche: int
    cell: int


def assign_niche(cell: int, mode: ControlMode, rng: np.random.Generator) -> int:
    """个体占据的生态位

    按行为划分时就是行为格子，不消耗随机数；随机对照时从全部格子中均匀抽取，
    与行为格子无关。
    """
    if mode == ControlMode.BEHAVIOR_NICHE:
        return int(cell)
    return int(rng.integers(0, N_CELLS))


def evaluate_genomes(
    maze: Maze,
    genomes: Sequence[NeatGenome],
    robot: RobotParams,
    steepness: float = 4.9,
    batch_size: int = 8192,
) -> np.ndarray:
    """成批评估基因组，返回每个基因组的行为格子

    Args:
        maze: 迷宫
        genomes: 基因组
        robot: 机器人参数
        steepness: sigmoid陡度
        batch_size: 每批同时仿真的网络数

    Returns:
        格子编号数组
    """
    cells = np.empty(len(genomes), dtype=np.int64)
    for lo in range(0, len(genomes), batch_size):
        chunk = genomes[lo : lo + batch_size]
        final = simulate_batch(maze, NeatBatch(chunk, steepness), robot, len(chunk))
        cells[lo : lo + len(chunk)] = niche_cells(final, maze.bounds)
    return cells


def estimate_evolvability_batch(
    genomes: Sequence[NeatGenome],
    maze: Maze,
    params: NeatParams,
    rng: np.random.Generator,
    robot: Optional[RobotParams] = None,
) -> np.ndarray:
    """为每个基因组估计演化能力：evolvability_samples个独立变异体落入的不同格子数

    每个基因组使用自己的一次性创新追踪器，估计过程不影响运行中的编号。

    Returns:
        每个基因组的估计值
    """
    robot = robot or RobotParams.practical()
    samples = params.evolvability_samples
    mutants: List[NeatGenome] = []
    for genome in genomes:
        tracker = InnovationTracker.from_genome(genome)
        mutants.extend(mutate_neat(genome, params, tracker, rng) for _ in range(samples))

    cells = evaluate_genomes(maze, mutants, robot, params.sigmoid_steepness)
    return np.array(
        [np.unique(cells[i * samples : (i + 1) * samples]).size for i in range(len(genomes))],
        dtype=np.int64,
    )


def estimate_evolvability(
    genome: NeatGenome,
    maze: Maze,
    params: NeatParams,
    rng: np.random.Generator,
    robot: Optional[RobotParams] = None,
) -> int:
    """估计单个基因组的演化能力

    Args:
        genome: 基因组
        maze: 迷宫
        params: 参数
        rng: 随机流
        robot: 机器人参数，默认6传感器机器人

    Returns:
        不同行为格子数，取值 [1, min(evolvability_samples, 400)]
    """
    return int(estimate_evolvability_batch([genome], maze, params, rng, robot)[0])


class _AuditWriter:
    """检查点样本基因组的JSON Lines记录"""

    def __init__(self, path: Optional[Union[str, Path]]):
        self.path = Path(path) if path else None
        if self.path is not None:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            self.path.write_bytes(b"")

    def write(
        self,
        checkpoint: int,
        sample: Sequence[NeatIndividual],
        estimates: np.ndarray,
    ) -> None:
        if self.path is None:
            return
        with self.path.open("ab") as f:
            for individual, estimate in zip(sample, estimates):
                line = {
                    "checkpoint": checkpoint,
                    "niche": individual.niche,
                    "cell": individual.cell,
                    "evolvability": int(estimate),
                    "genome": individual.genome.to_dict(),
                }
                f.write(orjson.dumps(line) + b"\n")


def run_neat_niched(
    maze: Maze,
    params: Union[NeatParams, Mapping[str, Any], None],
    seed: int,
    run_index: int = 0,
    robot: Optional[RobotParams] = None,
    checkpoint_every: int = 500,
    audit_path: Optional[Union[str, Path]] = None,
) -> Tuple[RunRecord, List[NeatIndividual]]:
    """运行一次实用模型

    检查点为种子评估（第1次评估）、每checkpoint_every次评估以及最后一次评估。
    每个检查点在至多estimate_sample_cap个均匀抽样的存活个体上估计演化能力，
    这些估计所用的评估单独计数，不占用评估预算。

    Args:
        maze: 迷宫
        params: 模型参数
        seed: 基础种子
        run_index: 运行序号
        robot: 机器人参数，默认6传感器机器人
        checkpoint_every: 记录频率（评估次数）
        audit_path: 检查点样本基因组的输出路径（JSON Lines），为None时不写出

    Returns:
        (运行记录, 最终种群)
    """
    params = coerce_params(NeatParams, params)
    robot = robot or RobotParams.practical()
    rng = seed_stream(seed, run_index)
    estimate_rng = seed_stream(seed, run_index, substream=1)
    audit = _AuditWriter(audit_path)
    schedule = checkpoint_schedule(params.evaluation_budget, checkpoint_every, first=1)

    record = RunRecord(
        model=f"neat-{params.control_mode.value}",
        seed=seed + run_index,
        run_index=run_index,
        metadata={"control_mode": params.control_mode.value},
    )
    tracker = InnovationTracker()
    occupancy = np.zeros(N_CELLS, dtype=np.int64)
    population: List[NeatIndividual] = []
    estimate_evaluations: List[int] = []
    last_sample: Dict[str, List[int]] = {}

    def admit(genome: NeatGenome, cell: int) -> None:
        niche = assign_niche(cell, params.control_mode, rng)
        if occupancy[niche] < params.niche_capacity:
            occupancy[niche] += 1
            population.append(NeatIndividual(genome=genome, niche=niche, cell=cell))

    def checkpoint(evaluations: int) -> None:
        count = min(params.estimate_sample_cap, len(population))
        picks = estimate_rng.choice(len(population), size=count, replace=False)
        sample = [population[int(i)] for i in picks]
        estimates = estimate_evolvability_batch(
            [ind.genome for ind in sample], maze, params, estimate_rng, robot
        )
        estimate_evaluations.append(count * params.evolvability_samples)
        row = summarize_snapshot(
            evaluations, np.array([ind.niche for ind in sample]), estimates, evaluations
        )
        record.append(
            replace(
                row,
                pop_size=len(population),
                occupied_niches=int(np.count_nonzero(occupancy)),
            )
        )
        audit.write(evaluations, sample, estimates)
        last_sample.update(
            cells=[ind.cell for ind in sample],
            evolvability=[int(e) for e in estimates],
        )
        logger.debug(
            "neat_checkpoint",
            run_index=run_index,
            evaluations=evaluations,
            pop_size=len(population),
            mean_evolvability=row.pop_mean_evolvability,
        )

    founder = initial_genome(rng, tracker, len(robot.sensor_angles), params.weight_bound)
    admit(founder, int(evaluate_genomes(maze, [founder], robot, params.sigmoid_steepness)[0]))
    evaluations = 1
    checkpoint(evaluations)

    for point in schedule[1:]:
        while evaluations < point:
            batch = min(params.evaluation_batch, point - evaluations)
            parents = [population[int(rng.integers(0, len(population)))] for _ in range(batch)]
            children = [mutate_neat(p.genome, params, tracker, rng) for p in parents]
            cells = evaluate_genomes(maze, children, robot, params.sigmoid_steepness)
            evaluations += batch
            for child, cell in zip(children, cells):
                admit(child, int(cell))
        checkpoint(evaluations)

    record.metadata.update(
        {
            "evaluations": evaluations,
            "estimate_evaluations": int(sum(estimate_evaluations)),
            "estimate_evaluations_per_checkpoint": estimate_evaluations,
            "final_pop_size": len(population),
            "innovations": tracker.next_innovation,
            "final_sample": dict(last_sample),
        }
    )
    logger.info(
        "neat_run_finished",
        run_index=run_index,
        control_mode=params.control_mode.value,
        evaluations=evaluations,
        pop_size=len(population),
    )
    return record, population
