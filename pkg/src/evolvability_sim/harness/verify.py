"""自检套件

一组快速的独立校验：编码、邻域、统计公式、随机变异频率、传感器镜像对称、
缩减空间查找表与并行构建的确定性。每项校验返回结果而不是抛出异常，便于命令行汇总。
"""

import math
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Dict, List, Optional

import numpy as np

from ..abstract.dynamics import mutate_arrays
from ..ann.genome import (
    SPACE_SIZE,
    GenotypeSpace,
    decode_batch,
    encode_batch,
    single_mutation_neighbors,
)
from ..ann.network import FixedAnnController
from ..ann.table import tabulate
from ..analysis.statistics import pearson
from ..config.settings import (
    AbstractParams,
    ExperimentConfig,
    ModelKind,
    RobotParams,
    TableSettings,
)
from ..core.logger import LoggerMixin
from ..maze.geometry import default_maze
from ..maze.robot import evaluate_controller, sense_batch
from .seeds import seed_stream
from .tabulation import TABLE_DIR, build_table

SMALL_MASK = "**0000000000000000"
# 双侧99.99%正态分位数
BINOMIAL_Z = 3.89


@dataclass
class CheckResult:
    """一项校验的结果"""

    name: str
    passed: bool
    detail: str

    def to_dict(self) -> Dict[str, object]:
        return {"name": self.name, "passed": self.passed, "detail": self.detail}


def check_neighborhood(samples: int = 10_000, seed: int = 0) -> CheckResult:
    """完整空间中每个基因组恰有36个互不相同、只差一个基因的邻居"""
    space = GenotypeSpace.full()
    ids = seed_stream(seed).integers(0, SPACE_SIZE, size=samples)
    neighbors = space.neighbors(ids)
    distinct = np.sort(neighbors, axis=1)
    unique_rows = bool(np.all(np.diff(distinct, axis=1) > 0))
    trits = decode_batch(neighbors.ravel()).reshape(samples, neighbors.shape[1], -1)
    changed = np.count_nonzero(trits != decode_batch(ids)[:, None, :], axis=2)
    passed = neighbors.shape[1] == 36 and unique_rows and bool(np.all(changed == 1))
    return CheckResult("neighborhood", passed, f"{samples}个基因组，每个{neighbors.shape[1]}个邻居")


def check_roundtrip(samples: int = 100_000, seed: int = 0) -> CheckResult:
    """编号 -> 三值 -> 编号 保持不变"""
    ids = seed_stream(seed).integers(0, SPACE_SIZE, size=samples)
    mismatches = int(np.count_nonzero(encode_batch(decode_batch(ids)) != ids))
    return CheckResult("roundtrip", mismatches == 0, f"{samples}个编号，{mismatches}个不一致")


def check_pearson(tolerance: float = 1e-12) -> CheckResult:
    """与按求和公式直接计算的相关系数比较"""
    x = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0, 10.0]
    y = [2.3, 1.9, 3.8, 4.1, 4.9, 6.5, 6.2, 8.8, 8.1, 10.4]
    n = len(x)
    sx, sy = math.fsum(x), math.fsum(y)
    sxx = math.fsum(a * a for a in x)
    syy = math.fsum(b * b for b in y)
    sxy = math.fsum(a * b for a, b in zip(x, y))
    direct = (n * sxy - sx * sy) / math.sqrt((n * sxx - sx**2) * (n * syy - sy**2))
    r = pearson(x, y).r
    diff = abs(r - direct) if r is not None else math.inf
    return CheckResult("pearson", diff <= tolerance, f"r={r!r}，直接公式={direct!r}，差{diff:.2e}")


def check_move_frequency(samples: int = 1_000_000, seed: int = 0) -> CheckResult:
    """演化能力0.05时生态位改变的比例落在二项分布的置信区间内"""
    p = 0.05
    zeros = np.zeros(samples, dtype=np.int64)
    x, y, _ = mutate_arrays(
        zeros, zeros.copy(), np.full(samples, p), AbstractParams(), seed_stream(seed)
    )
    fraction = float(np.count_nonzero((x != 0) | (y != 0))) / samples
    bound = BINOMIAL_Z * math.sqrt(p * (1 - p) / samples)
    return CheckResult(
        "move_frequency", abs(fraction - p) <= bound, f"比例{fraction:.5f}，允许偏差{bound:.5f}"
    )


def check_sensor_symmetry(
    samples: int = 2_000, seed: int = 0, tolerance: float = 1e-9
) -> CheckResult:
    """关于x轴镜像迷宫、位姿与传感器角度后，读数保持不变"""
    maze = default_maze()
    mirror = maze.mirrored()
    robot = RobotParams.practical()
    flipped = robot.model_copy(update={"sensor_angles": [-a for a in robot.sensor_angles]})
    rng = seed_stream(seed)
    bounds = maze.bounds
    x = rng.uniform(bounds.min_x, bounds.max_x, size=samples)
    y = rng.uniform(bounds.min_y, bounds.max_y, size=samples)
    heading = rng.uniform(-math.pi, math.pi, size=samples)

    direct = sense_batch(maze, x, y, heading, robot)
    mirrored = sense_batch(mirror, x, -y, -heading, flipped)
    diff = float(np.abs(direct - mirrored).max())
    return CheckResult("sensor_symmetry", diff <= tolerance, f"{samples}个位姿，最大差{diff:.2e}")


def check_small_table() -> CheckResult:
    """3^2缩减空间的查找表与逐个基因组的直接仿真一致"""
    maze = default_maze()
    settings = ExperimentConfig(model=ModelKind.ROBOT_NICHED)
    robot = settings.robot
    steepness = settings.table.sigmoid_steepness
    space = GenotypeSpace(SMALL_MASK)
    records = tabulate(maze, robot, space, steepness=steepness)

    def cell(genome) -> int:
        controller = FixedAnnController(genome, steepness)
        return evaluate_controller(maze, controller, robot).niche.cell_id

    mismatched: List[int] = []
    for local_id in range(space.size):
        genome = space.genome(local_id)
        neighbors = {cell(g) for g in single_mutation_neighbors(genome, space)}
        if (records["niche"][local_id], records["evolvability"][local_id]) != (
            cell(genome),
            len(neighbors),
        ):
            mismatched.append(local_id)
    return CheckResult(
        "small_table", not mismatched, f"{space.size}条记录，不一致: {mismatched or '无'}"
    )


def check_parallel_build() -> CheckResult:
    """单进程与双进程构建的分片文件逐字节相同"""
    with tempfile.TemporaryDirectory() as tmp:
        outputs = []
        for threads in (1, 2):
            config = ExperimentConfig(
                model=ModelKind.ROBOT_NICHED,
                output_dir=Path(tmp) / f"threads_{threads}",
                table=TableSettings(mask=SMALL_MASK, shard_size=3),
            )
            result = build_table(config, threads=threads)
            table_dir = Path(config.output_dir) / TABLE_DIR
            outputs.append(
                {
                    entry.file: (table_dir / entry.file).read_bytes()
                    for entry in result.manifest.shards
                }
            )
    identical = outputs[0] == outputs[1]
    return CheckResult("parallel_build", identical, f"{len(outputs[0])}个分片")


CHECKS: Dict[str, Callable[[], CheckResult]] = {
    "neighborhood": check_neighborhood,
    "roundtrip": check_roundtrip,
    "pearson": check_pearson,
    "move_frequency": check_move_frequency,
    "sensor_symmetry": check_sensor_symmetry,
    "small_table": check_small_table,
    "parallel_build": check_parallel_build,
}


class SelfTest(LoggerMixin):
    """运行自检并汇总结果"""

    def run(self, names: Optional[List[str]] = None) -> List[CheckResult]:
        results = []
        for name in names or list(CHECKS):
            try:
                result = CHECKS[name]()
            except Exception as e:  # noqa: BLE001
                result = CheckResult(name, False, f"{type(e).__name__}: {e}")
            log = self.logger.info if result.passed else self.logger.error
            log("check_finished", check=name, passed=result.passed, detail=result.detail)
            results.append(result)
        return results
