"""查找表构建

把基因型空间按shard_size划分为连续区间。第一阶段在进程池中仿真每个区间得到生态位，
合并为整个空间的生态位数组后，第二阶段统计每个基因型的邻居生态位数。
分片划分只由shard_size决定，因此结果与工作进程数无关。
"""

from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import List, Optional, Tuple

import numpy as np
import orjson

from ..ann.genome import GenotypeSpace
from ..ann.table import (
    FLAG_VALID,
    RECORD_DTYPE,
    LookupTable,
    ShardEntry,
    TableManifest,
    TableSummary,
    evolvability_counts,
    load_table,
    simulate_niches,
    verify_coverage,
    write_manifest,
    write_shard,
)
from ..config.settings import ExperimentConfig, RobotParams
from ..core.config import Config
from ..core.logger import LoggerMixin, log_execution_time
from ..maze.geometry import Maze
from .experiment import resolve_maze

TABLE_DIR = "table"
TABLE_MANIFEST = "manifest.json"
SUMMARY_FILE = "summary.json"


@dataclass
class TableBuildResult:
    """查找表构建结果"""

    manifest_path: Path
    manifest: TableManifest
    summary: TableSummary


def partition(size: int, shard_size: int) -> List[Tuple[int, int]]:
    """把 [0, size) 划分为至多shard_size的连续区间"""
    return [(lo, min(lo + shard_size, size)) for lo in range(0, size, shard_size)]


def _simulate_range(
    maze: Maze,
    robot: RobotParams,
    mask: str,
    steepness: float,
    batch_size: int,
    bounds: Tuple[int, int],
) -> Tuple[int, np.ndarray]:
    start, stop = bounds
    space = GenotypeSpace(mask)
    ids = np.arange(start, stop, dtype=np.int64)
    return start, simulate_niches(maze, robot, space, ids, steepness, batch_size)


class TableBuilder(LoggerMixin):
    """两阶段查找表构建器"""

    def __init__(
        self,
        config: ExperimentConfig,
        threads: Optional[int] = None,
        runtime: Optional[Config] = None,
    ):
        """初始化构建器

        Args:
            config: 实验配置（使用其中的迷宫、机器人与查找表设置）
            threads: 工作进程数，默认取配置或运行时设置
            runtime: 运行时配置
        """
        self.config = config
        self.runtime = runtime or Config()
        self.threads = threads or config.threads or self.runtime.threads
        self.space = GenotypeSpace(config.table.mask)
        self.table_dir = Path(config.output_dir) / TABLE_DIR

    def simulate(self, maze: Maze) -> np.ndarray:
        """第一阶段：整个空间的生态位"""
        settings = self.config.table
        ranges = partition(self.space.size, settings.shard_size)
        args = (
            maze,
            self.config.robot,
            settings.mask,
            settings.sigmoid_steepness,
            self.runtime.batch_size,
        )
        niches = np.empty(self.space.size, dtype=np.uint16)

        if self.threads <= 1 or len(ranges) == 1:
            results = (_simulate_range(*args, bounds) for bounds in ranges)
            for done, (start, cells) in enumerate(results, 1):
                niches[start : start + cells.size] = cells
                self.logger.debug("shard_simulated", start=start, done=done, total=len(ranges))
            return niches

        with ProcessPoolExecutor(max_workers=min(self.threads, len(ranges))) as pool:
            futures = [pool.submit(_simulate_range, *args, bounds) for bounds in ranges]
            for done, future in enumerate(futures, 1):
                start, cells = future.result()
                niches[start : start + cells.size] = cells
                self.logger.debug("shard_simulated", start=start, done=done, total=len(ranges))
        return niches

    @log_execution_time
    def build(self) -> TableBuildResult:
        """构建、写出并重新加载校验查找表

        Returns:
            构建结果

        Raises:
            TableIntegrityError: 写出的分片未能通过校验
        """
        maze = resolve_maze(self.config)
        settings = self.config.table
        self.logger.info(
            "table_build_started",
            mask=settings.mask,
            space_size=self.space.size,
            shard_size=settings.shard_size,
            threads=self.threads,
        )

        niches = self.simulate(maze)

        shards: List[ShardEntry] = []
        for index, (start, stop) in enumerate(partition(self.space.size, settings.shard_size)):
            ids = np.arange(start, stop, dtype=np.int64)
            records = np.empty(ids.size, dtype=RECORD_DTYPE)
            records["niche"] = niches[ids]
            records["evolvability"] = evolvability_counts(niches, self.space, ids)
            records["flags"] = FLAG_VALID
            name = f"shard_{index:05d}.evlt"
            digest = write_shard(self.table_dir / name, start, records)
            shards.append(ShardEntry(file=name, start=start, count=ids.size, digest=digest))
        verify_coverage([(s.start, s.count) for s in shards], self.space.size)

        manifest = TableManifest(
            mask=settings.mask,
            space_size=self.space.size,
            shard_size=settings.shard_size,
            maze_digest=maze.digest(),
            steepness=settings.sigmoid_steepness,
            robot=self.config.robot.model_dump(mode="json"),
            shards=shards,
        )
        manifest_path = write_manifest(self.table_dir / TABLE_MANIFEST, manifest)

        table: LookupTable = load_table(manifest_path, maze)
        summary = table.summary()
        (Path(self.config.output_dir) / SUMMARY_FILE).write_bytes(
            orjson.dumps(
                asdict(summary),
                option=orjson.OPT_INDENT_2 | orjson.OPT_SORT_KEYS | orjson.OPT_NON_STR_KEYS,
            )
        )
        self.logger.info(
            "table_build_finished",
            manifest=str(manifest_path),
            shards=len(shards),
            mean_evolvability=summary.mean_evolvability,
            max_evolvability=summary.max_evolvability,
        )
        return TableBuildResult(manifest_path=manifest_path, manifest=manifest, summary=summary)


def build_table(
    config: ExperimentConfig, threads: Optional[int] = None, runtime: Optional[Config] = None
) -> TableBuildResult:
    """构建查找表

    Args:
        config: 实验配置
        threads: 工作进程数
        runtime: 运行时配置

    Returns:
        构建结果
    """
    return TableBuilder(config, threads, runtime).build()
