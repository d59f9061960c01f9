"""实验批次编排

并行执行多次独立运行，写出每次运行的时间序列与最终种群，汇总分析结果并记录运行清单。
单次运行失败不会中断批次，失败信息写入清单。

输出目录结构：

    config.json                      规范化配置
    manifest.json                    运行清单
    runs/run_000.csv                 每次运行的时间序列
    runs/run_000_final.csv           每次运行的最终种群
    runs/run_000_genomes.jsonl       实用模型的检查点样本基因组
    aggregate.csv                    逐检查点均值与标准误
    heatmap.csv                      生态位热图
    distance_profile.csv             距离剖面（抽象模型）
    distance_profile_correlation.json
    heritability.json                亲子演化能力相关（机器人模型）
    summary.json                     最终与初始统计的配对比较
"""

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
import orjson
import pandas as pd

from .. import __version__
from ..abstract.runner import run_abstract
from ..analysis.export import (
    read_run_record,
    write_correlation,
    write_distance_profile,
    write_frame,
    write_heatmap,
    write_run_record,
)
from ..analysis.niches import distance_profile, heatmap, robot_heatmap
from ..analysis.records import RunRecord
from ..analysis.statistics import aggregate_runs, paired_comparison
from ..ann.evolution import heritability, run_robot_drift, run_robot_niched
from ..ann.table import LookupTable, load_table
from ..config.config_manager import config_digest
from ..config.settings import AbstractVariant, ControlMode, ExperimentConfig, ModelKind
from ..core.config import Config
from ..core.errors import ConfigurationError, EmptyInputError, ScheduleMismatchError
from ..core.logger import LoggerMixin, get_logger, log_execution_time
from ..maze.geometry import DEFAULT_RADIUS, Maze, default_maze, load_maze
from ..neat.evolution import run_neat_niched
from .manifest import RunEntry, RunManifest, utc_now, write_config, write_manifest
from .seeds import STREAM_ALGORITHM, seed_stream

logger = get_logger(__name__)

RUNS_DIR = "runs"
FINAL_COLUMNS = {
    "abstract": ["x", "y", "evolvability"],
    "cell": ["cell", "evolvability"],
}


@dataclass
class RunOutcome:
    """单次运行的结果（在工作进程中产生）"""

    run_index: int
    seed: int
    started_at: Any
    finished_at: Any
    record: Optional[RunRecord] = None
    final: Optional[pd.DataFrame] = None
    error: Optional[str] = None


@dataclass
class ExperimentResult:
    """一次实验批次的结果"""

    output_dir: Path
    manifest: RunManifest
    records: List[RunRecord] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.manifest.failures


def resolve_maze(config: ExperimentConfig) -> Maze:
    """按配置加载迷宫；半径取对应模型的机器人参数"""
    radius = config.neat_robot.radius if config.is_neat else config.robot.radius
    if config.maze_file is not None:
        return load_maze(config.maze_file, radius=radius)
    return default_maze(radius=radius if radius else DEFAULT_RADIUS)


def _execute_run(
    config: ExperimentConfig,
    run_index: int,
    maze: Optional[Maze],
    table: Optional[LookupTable],
    audit_path: Optional[Path],
) -> RunOutcome:
    """执行一次运行并把异常转换为失败结果"""
    started = utc_now()
    seed = config.base_seed + run_index
    try:
        record, final = _simulate(config, run_index, maze, table, audit_path)
        return RunOutcome(run_index, seed, started, utc_now(), record=record, final=final)
    except Exception as e:  # noqa: BLE001
        return RunOutcome(run_index, seed, started, utc_now(), error=f"{type(e).__name__}: {e}")


def _simulate(
    config: ExperimentConfig,
    run_index: int,
    maze: Optional[Maze],
    table: Optional[LookupTable],
    audit_path: Optional[Path],
):
    model = config.model
    cadence = config.checkpoints

    if config.is_abstract:
        variant = (
            AbstractVariant.DRIFT if model == ModelKind.ABSTRACT_DRIFT else AbstractVariant.NICHED
        )
        record, pop = run_abstract(
            config.abstract, variant, config.base_seed, run_index, cadence.abstract_every
        )
        final = pd.DataFrame({"x": pop.x, "y": pop.y, "evolvability": pop.evo})
        return record, final

    if config.is_robot:
        assert table is not None
        runner = run_robot_drift if model == ModelKind.ROBOT_DRIFT else run_robot_niched
        record, ids = runner(
            table, config.robot_drift, config.base_seed, run_index, cadence.robot_every
        )
        final = pd.DataFrame(
            {
                "cell": table.niche_of(ids).astype(np.int64),
                "evolvability": table.evolvability_of(ids).astype(np.int64),
            }
        )
        return record, final

    assert maze is not None
    mode = (
        ControlMode.BEHAVIOR_NICHE if model == ModelKind.NEAT_NICHED else ControlMode.RANDOM_NICHE
    )
    params = config.neat.model_copy(update={"control_mode": mode})
    record, _ = run_neat_niched(
        maze,
        params,
        config.base_seed,
        run_index,
        robot=config.neat_robot,
        checkpoint_every=cadence.neat_every,
        audit_path=audit_path,
    )
    sample = record.metadata.pop("final_sample")
    final = pd.DataFrame(
        {"cell": sample["cells"], "evolvability": sample["evolvability"]}
    )
    return record, final


class ExperimentRunner(LoggerMixin):
    """实验批次执行器"""

    def __init__(self, config: ExperimentConfig, runtime: Optional[Config] = None):
        """初始化执行器

        Args:
            config: 实验配置
            runtime: 运行时配置（线程数等），默认从环境变量创建
        """
        self.config = config
        self.runtime = runtime or Config()
        self.output_dir = Path(config.output_dir)
        self.threads = config.threads or self.runtime.threads

    def _load_inputs(self):
        maze: Optional[Maze] = None
        table: Optional[LookupTable] = None
        if self.config.is_robot:
            if self.config.table_manifest is None:
                raise ConfigurationError("机器人模型需要table_manifest（先运行tabulate）")
            maze = resolve_maze(self.config)
            table = load_table(self.config.table_manifest, maze)
            if table.space.mask != self.config.table.mask:
                raise ConfigurationError(
                    f"查找表掩码{table.space.mask}与配置{self.config.table.mask}不一致"
                )
        elif self.config.is_neat:
            maze = resolve_maze(self.config)
        return maze, table

    @log_execution_time
    def run(self) -> ExperimentResult:
        """执行所有运行并写出结果

        Returns:
            实验结果
        """
        config = self.config
        runs_dir = self.output_dir / RUNS_DIR
        runs_dir.mkdir(parents=True, exist_ok=True)

        manifest = RunManifest(
            model=config.model.value,
            config_digest=config_digest(config),
            code_version=__version__,
            seed_algorithm=STREAM_ALGORITHM,
            base_seed=config.base_seed,
            started_at=utc_now(),
        )
        manifest.add_file(write_config(config, self.output_dir), self.output_dir)

        maze, table = self._load_inputs()
        self.logger.info(
            "experiment_started",
            model=config.model.value,
            runs=config.runs,
            threads=self.threads,
            output_dir=str(self.output_dir),
        )

        audit_paths = {
            i: (runs_dir / f"run_{i:03d}_genomes.jsonl" if config.is_neat else None)
            for i in range(config.runs)
        }
        outcomes = self._dispatch(maze, table, audit_paths)

        records: List[RunRecord] = []
        finals: List[pd.DataFrame] = []
        for outcome in outcomes:
            entry = RunEntry(
                run_index=outcome.run_index,
                seed=outcome.seed,
                started_at=outcome.started_at,
                finished_at=outcome.finished_at,
            )
            if outcome.error is not None:
                entry.status = "failed"
                entry.error = outcome.error
                self.logger.error(
                    "run_failed",
                    run_index=outcome.run_index,
                    seed=outcome.seed,
                    error=outcome.error,
                )
            else:
                assert outcome.record is not None and outcome.final is not None
                stem = runs_dir / f"run_{outcome.run_index:03d}"
                series = write_run_record(outcome.record, f"{stem}.csv")
                final = write_frame(outcome.final, f"{stem}_final.csv")
                entry.files = [manifest.add_file(p, self.output_dir) for p in (series, final)]
                audit = audit_paths[outcome.run_index]
                if audit is not None and audit.exists():
                    entry.files.append(manifest.add_file(audit, self.output_dir))
                entry.metadata = dict(outcome.record.metadata)
                records.append(outcome.record)
                finals.append(outcome.final)
            manifest.runs.append(entry)

        for path in analyze_outputs(config, records, finals, self.output_dir, table):
            manifest.add_file(path, self.output_dir)

        manifest.finished_at = utc_now()
        write_manifest(manifest, self.output_dir)
        self.logger.info(
            "experiment_finished",
            model=config.model.value,
            succeeded=len(records),
            failed=len(manifest.failures),
        )
        return ExperimentResult(output_dir=self.output_dir, manifest=manifest, records=records)

    def _dispatch(
        self,
        maze: Optional[Maze],
        table: Optional[LookupTable],
        audit_paths: Dict[int, Optional[Path]],
    ) -> List[RunOutcome]:
        """把运行分发到进程池；结果按运行序号排序"""
        indices = range(self.config.runs)
        if self.threads <= 1 or self.config.runs == 1:
            return [_execute_run(self.config, i, maze, table, audit_paths[i]) for i in indices]

        outcomes: List[RunOutcome] = []
        with ProcessPoolExecutor(max_workers=min(self.threads, self.config.runs)) as pool:
            futures = {
                i: pool.submit(_execute_run, self.config, i, maze, table, audit_paths[i])
                for i in indices
            }
            for i, future in futures.items():
                try:
                    outcomes.append(future.result())
                except Exception as e:  # noqa: BLE001
                    now = utc_now()
                    outcomes.append(
                        RunOutcome(
                            i,
                            self.config.base_seed + i,
                            now,
                            now,
                            error=f"{type(e).__name__}: {e}",
                        )
                    )
        return sorted(outcomes, key=lambda o: o.run_index)


def analyze_outputs(
    config: ExperimentConfig,
    records: List[RunRecord],
    finals: List[pd.DataFrame],
    output_dir: Path,
    table: Optional[LookupTable] = None,
) -> List[Path]:
    """计算并写出汇总分析结果

    Args:
        config: 实验配置
        records: 成功运行的记录
        finals: 对应的最终种群
        output_dir: 输出目录
        table: 机器人模型的查找表（用于遗传相关）

    Returns:
        写出的文件
    """
    written: List[Path] = []
    if not records:
        return written
    skipped: Dict[str, str] = {}

    try:
        written.append(write_frame(aggregate_runs(records), output_dir / "aggregate.csv"))
    except ScheduleMismatchError as e:
        logger.warning("aggregate_skipped", output_dir=str(output_dir), reason=str(e))
        skipped["aggregate"] = str(e)

    pooled = pd.concat(finals, ignore_index=True)
    if not pooled.empty:
        evo = pooled["evolvability"].to_numpy(dtype=np.float64)
        if config.is_abstract:
            points = pooled[["x", "y"]].to_numpy(dtype=np.int64)
            written.append(write_heatmap(heatmap(points, evo), output_dir / "heatmap.csv"))
            try:
                profile = distance_profile(points, evo, metric=config.analysis.distance_metric)
                written.extend(
                    write_distance_profile(profile, output_dir, "distance_profile").values()
                )
            except EmptyInputError as e:
                logger.warning(
                    "distance_profile_skipped", output_dir=str(output_dir), reason=str(e)
                )
                skipped["distance_profile"] = str(e)
        else:
            cells = pooled["cell"].to_numpy(dtype=np.int64)
            written.append(write_heatmap(robot_heatmap(cells, evo), output_dir / "heatmap.csv"))

    if table is not None:
        result = heritability(
            table,
            config.analysis.heritability_samples,
            seed_stream(config.base_seed, 0, substream=2),
        )
        written.append(
            write_correlation(
                result,
                output_dir / "heritability.json",
                {"sample_size": config.analysis.heritability_samples, "mask": table.space.mask},
            )
        )

    written.append(_write_summary(records, output_dir / "summary.json", skipped))
    return written


def _write_summary(
    records: List[RunRecord], path: Path, skipped: Optional[Dict[str, str]] = None
) -> Path:
    """最终检查点统计及其相对初始检查点的配对单侧检验；未能写出的分析记在skipped下"""
    summary: Dict[str, Any] = {"runs": len(records)}
    if skipped:
        summary["skipped"] = dict(skipped)
    for name in ("pop_mean_evolvability", "niche_mean_evolvability"):
        initial = [record.rows[0] for record in records]
        final = [record.final() for record in records]
        a = [getattr(row, name) for row in final]
        b = [getattr(row, name) for row in initial]
        entry: Dict[str, Any] = {
            "final_mean": float(np.mean(a)),
            "initial_mean": float(np.mean(b)),
        }
        if len(records) >= 2:
            entry["final_vs_initial"] = paired_comparison(a, b).to_dict()
        summary[name] = entry
    summary["cumulative_individuals_mean"] = float(
        np.mean([record.final().cumulative_individuals for record in records])
    )
    path.write_bytes(orjson.dumps(summary, option=orjson.OPT_INDENT_2 | orjson.OPT_SORT_KEYS))
    return path


def load_run_records(
    output_dir: Path, config: ExperimentConfig
) -> Tuple[List[RunRecord], List[pd.DataFrame]]:
    """读取输出目录中保存的运行记录与最终种群（按运行序号排序）

    Raises:
        EmptyInputError: 目录中没有运行记录
    """
    runs_dir = Path(output_dir) / RUNS_DIR
    records: List[RunRecord] = []
    finals: List[pd.DataFrame] = []
    for series in sorted(runs_dir.glob("run_[0-9][0-9][0-9].csv")):
        run_index = int(series.stem.split("_")[1])
        records.append(
            read_run_record(
                series,
                model=config.model.value,
                seed=config.base_seed + run_index,
                run_index=run_index,
            )
        )
        finals.append(pd.read_csv(runs_dir / f"{series.stem}_final.csv"))
    if not records:
        raise EmptyInputError(f"目录中没有运行记录: {runs_dir}")
    return records, finals


def analyze_directory(output_dir: Path, config: ExperimentConfig) -> List[Path]:
    """从已保存的运行记录重新计算汇总分析

    Args:
        output_dir: 实验输出目录
        config: 该目录保存的配置

    Returns:
        写出的文件
    """
    records, finals = load_run_records(output_dir, config)
    table = None
    if config.is_robot and config.table_manifest is not None:
        table = load_table(config.table_manifest, resolve_maze(config))
    return analyze_outputs(config, records, finals, Path(output_dir), table)


def run_experiment(
    config: ExperimentConfig, runtime: Optional[Config] = None
) -> ExperimentResult:
    """执行实验批次

    Args:
        config: 实验配置
        runtime: 运行时配置

    Returns:
        实验结果
    """
    return ExperimentRunner(config, runtime).run()
