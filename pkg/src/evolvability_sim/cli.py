"""命令行入口

``evosim run | tabulate | analyze | compare | verify``。日志写到stderr，stdout只输出机器可读的JSON摘要。
"""

import dataclasses
import os
import sys
from pathlib import Path
from typing import Any, Dict, Optional

import click
import orjson

from . import __version__
from .config.config_manager import ConfigManager
from .config.settings import ExperimentConfig, ModelKind
from .core.config import Config
from .core.errors import ConfigurationError, EvolvabilitySimError
from .core.logger import get_logger, setup_logging

logger = get_logger(__name__)


def _emit(payload: Dict[str, Any]) -> None:
    raw = orjson.dumps(
        payload, option=orjson.OPT_INDENT_2 | orjson.OPT_NON_STR_KEYS, default=str
    )
    click.echo(raw.decode("utf-8"))


def _fail(error: Exception, code: int = 1) -> None:
    payload: Dict[str, Any] = {
        "status": "error",
        "type": type(error).__name__,
        "error": str(error),
    }
    if isinstance(error, ConfigurationError) and error.errors:
        payload["details"] = error.errors
    _emit(payload)
    sys.exit(code)


def _configure_logging(
    runtime: Config, level: Optional[str], config: Optional[ExperimentConfig] = None
) -> Config:
    """日志设置的优先级：命令行 > 环境变量 > 配置文件"""
    updates: Dict[str, Any] = {}
    if level:
        updates["log_level"] = level
    elif config is not None and "EVOSIM_LOG_LEVEL" not in os.environ:
        updates["log_level"] = config.logging.level
    if config is not None:
        updates["log_json"] = runtime.log_json or config.logging.json_format
        updates["log_file"] = runtime.log_file or config.logging.file_path
    runtime = dataclasses.replace(runtime, **updates)
    setup_logging(runtime)
    return runtime


def _build_config(
    config_file: Optional[Path],
    overrides: Dict[str, Any],
    defaults: Optional[Dict[str, Any]] = None,
) -> ExperimentConfig:
    return ConfigManager(config_file).build(overrides, defaults=defaults)


config_option = click.option(
    "--config", "config_file", type=click.Path(exists=True, dir_okay=False, path_type=Path),
    help="YAML或JSON配置文件",
)
seed_option = click.option("--seed", type=click.IntRange(min=0), help="基础种子")
out_option = click.option("--out", type=click.Path(file_okay=False, path_type=Path), help="输出目录")
threads_option = click.option("--threads", type=click.IntRange(min=1), help="工作进程数")
mask_option = click.option("--mask", help="18个来自'012*'的字符，*为自由基因")
log_option = click.option(
    "--log-level",
    type=click.Choice(["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"], case_sensitive=False),
    help="日志级别",
)


@click.group()
@click.version_option(__version__, prog_name="evosim")
def main() -> None:
    """演化能力仿真工具"""


@main.command()
@config_option
@click.option("--model", type=click.Choice([m.value for m in ModelKind]), help="要运行的模型")
@click.option("--runs", type=click.IntRange(min=1), help="独立运行次数")
@seed_option
@out_option
@threads_option
@mask_option
@log_option
def run(
    config_file: Optional[Path],
    model: Optional[str],
    runs: Optional[int],
    seed: Optional[int],
    out: Optional[Path],
    threads: Optional[int],
    mask: Optional[str],
    log_level: Optional[str],
) -> None:
    """运行实验批次"""
    from .harness.experiment import run_experiment

    runtime = _configure_logging(Config.from_env_file(), log_level)
    try:
        config = _build_config(
            config_file,
            {
                "model": model,
                "runs": runs,
                "base_seed": seed,
                "output_dir": str(out) if out else None,
                "threads": threads,
                "table.mask": mask,
            },
        )
        runtime = _configure_logging(runtime, log_level, config)
        result = run_experiment(config, runtime)
    except EvolvabilitySimError as e:
        logger.error("command_failed", command="run", error=str(e))
        _fail(e)
        return

    summary = result.manifest.failure_summary()
    summary.update(
        status="ok" if result.ok else "failed",
        output_dir=str(result.output_dir),
        config_digest=result.manifest.config_digest,
    )
    _emit(summary)
    if not result.ok:
        sys.exit(1)


@main.command()
@config_option
@seed_option
@out_option
@threads_option
@mask_option
@log_option
def tabulate(
    config_file: Optional[Path],
    seed: Optional[int],
    out: Optional[Path],
    threads: Optional[int],
    mask: Optional[str],
    log_level: Optional[str],
) -> None:
    """构建基因型查找表"""
    from .harness.tabulation import build_table

    runtime = _configure_logging(Config.from_env_file(), log_level)
    try:
        config = _build_config(
            config_file,
            {
                "base_seed": seed,
                "output_dir": str(out) if out else None,
                "threads": threads,
                "table.mask": mask,
            },
            defaults={"model": ModelKind.ROBOT_NICHED.value},
        )
        runtime = _configure_logging(runtime, log_level, config)
        result = build_table(config, threads, runtime)
    except EvolvabilitySimError as e:
        logger.error("command_failed", command="tabulate", error=str(e))
        _fail(e)
        return

    _emit(
        {
            "status": "ok",
            "manifest": str(result.manifest_path),
            "mask": result.manifest.mask,
            "space_size": result.manifest.space_size,
            "shards": len(result.manifest.shards),
            "summary": dataclasses.asdict(result.summary),
        }
    )


@main.command()
@click.option(
    "--out", type=click.Path(exists=True, file_okay=False, path_type=Path), required=True,
    help="实验输出目录",
)
@log_option
def analyze(out: Path, log_level: Optional[str]) -> None:
    """从保存的运行记录重新计算汇总分析"""
    from .harness.experiment import analyze_directory
    from .harness.manifest import check_manifest, read_config

    _configure_logging(Config.from_env_file(), log_level)
    try:
        problems = check_manifest(out)
        written = analyze_directory(out, read_config(out))
    except EvolvabilitySimError as e:
        logger.error("command_failed", command="analyze", error=str(e))
        _fail(e)
        return

    _emit(
        {
            "status": "ok" if not problems else "inconsistent",
            "problems": problems,
            "files": [Path(p).relative_to(out).as_posix() for p in written],
        }
    )
    if problems:
        sys.exit(1)


@main.command()
@click.argument("dir_a", type=click.Path(exists=True, file_okay=False, path_type=Path))
@click.argument("dir_b", type=click.Path(exists=True, file_okay=False, path_type=Path))
@click.option(
    "--out", type=click.Path(dir_okay=False, path_type=Path),
    help="结果文件，默认为DIR_A/comparison.json",
)
@log_option
def compare(dir_a: Path, dir_b: Path, out: Optional[Path], log_level: Optional[str]) -> None:
    """按种子配对比较两个批次（备择假设：DIR_A大于DIR_B）"""
    from .harness.compare import compare_batteries

    _configure_logging(Config.from_env_file(), log_level)
    try:
        result, path = compare_batteries(dir_a, dir_b, out)
    except EvolvabilitySimError as e:
        logger.error("command_failed", command="compare", error=str(e))
        _fail(e)
        return

    _emit({"status": "ok", "file": str(path), **result})


@main.command()
@click.option("--check", "checks", multiple=True, help="只运行指定的校验（可重复）")
@log_option
def verify(checks: tuple, log_level: Optional[str]) -> None:
    """运行自检套件"""
    from .harness.verify import CHECKS, SelfTest

    _configure_logging(Config.from_env_file(), log_level)
    unknown = [name for name in checks if name not in CHECKS]
    if unknown:
        _fail(ConfigurationError(f"未知的校验: {', '.join(unknown)}"))
        return

    results = SelfTest().run(list(checks) or None)
    passed = all(r.passed for r in results)
    _emit({"status": "ok" if passed else "failed", "checks": [r.to_dict() for r in results]})
    if not passed:
        sys.exit(1)


if __name__ == "__main__":
    main()
