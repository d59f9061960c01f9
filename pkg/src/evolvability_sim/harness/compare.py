"""批次间的配对比较

按种子配对两个实验批次的运行，对最终检查点的演化能力统计做配对单侧t检验
（备择假设：批次A大于批次B）。用于有限容量生态位对漂移、按行为划分生态位
对随机对照的比较。
"""

from pathlib import Path
from typing import Any, Dict, Optional, Tuple, Union

import orjson

from ..analysis.records import RunRecord
from ..analysis.statistics import paired_comparison
from ..core.errors import EmptyInputError
from ..core.logger import get_logger
from .experiment import load_run_records
from .manifest import check_manifest, read_config

logger = get_logger(__name__)

COMPARISON_FILE = "comparison.json"
COMPARED_STATISTICS = ("pop_mean_evolvability", "niche_mean_evolvability")

PathLike = Union[str, Path]


def _load_battery(directory: Path) -> Tuple[Dict[int, RunRecord], Dict[str, Any]]:
    config = read_config(directory)
    records, _ = load_run_records(directory, config)
    info = {
        "output_dir": str(directory),
        "model": config.model.value,
        "runs": len(records),
        "problems": check_manifest(directory),
    }
    return {record.seed: record for record in records}, info


def compare_batteries(
    dir_a: PathLike, dir_b: PathLike, out: Optional[PathLike] = None
) -> Tuple[Dict[str, Any], Path]:
    """比较两个批次的最终统计

    Args:
        dir_a: 批次A的输出目录（备择假设中较大的一方）
        dir_b: 批次B的输出目录
        out: 结果文件路径，默认写到批次A目录下的comparison.json

    Returns:
        (比较结果, 写出的文件)

    Raises:
        EmptyInputError: 种子相同的运行少于2对
        ConfigurationError: 目录中的配置或清单无法读取
    """
    root_a, root_b = Path(dir_a), Path(dir_b)
    runs_a, info_a = _load_battery(root_a)
    runs_b, info_b = _load_battery(root_b)

    seeds = sorted(set(runs_a) & set(runs_b))
    if len(seeds) < 2:
        raise EmptyInputError(f"两个批次只有{len(seeds)}对种子相同的运行，配对比较至少需要2对")
    unmatched = {"a": len(runs_a) - len(seeds), "b": len(runs_b) - len(seeds)}
    if unmatched["a"] or unmatched["b"]:
        logger.warning("unpaired_runs_dropped", **unmatched)

    statistics: Dict[str, Any] = {}
    for name in (*COMPARED_STATISTICS, "cumulative_individuals"):
        a = [float(getattr(runs_a[seed].final(), name)) for seed in seeds]
        b = [float(getattr(runs_b[seed].final(), name)) for seed in seeds]
        statistics[name] = {
            "a_mean": sum(a) / len(a),
            "b_mean": sum(b) / len(b),
            "a_vs_b": paired_comparison(a, b).to_dict(),
        }

    result: Dict[str, Any] = {
        "a": info_a,
        "b": info_b,
        "paired_seeds": seeds,
        "unmatched": unmatched,
        "statistics": statistics,
    }
    target = Path(out) if out is not None else root_a / COMPARISON_FILE
    target.parent.mkdir(parents=True, exist_ok=True)
    target.write_bytes(orjson.dumps(result, option=orjson.OPT_INDENT_2 | orjson.OPT_SORT_KEYS))

    logger.info(
        "batteries_compared",
        model_a=info_a["model"],
        model_b=info_b["model"],
        pairs=len(seeds),
        output=str(target),
    )
    return result, target
