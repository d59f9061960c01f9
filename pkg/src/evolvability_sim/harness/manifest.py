"""运行清单

记录一次实验批次的配置摘要、代码版本、每次运行的种子与起止时间，以及所有输出文件
（路径相对于输出目录）。
"""

from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import orjson
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from ..config.config_manager import canonical_config_bytes, config_digest
from ..config.settings import ExperimentConfig
from ..core.errors import ConfigurationError

MANIFEST_FILE = "manifest.json"
CONFIG_FILE = "config.json"


def utc_now() -> datetime:
    return datetime.now(timezone.utc)


class RunEntry(BaseModel):
    """单次运行的记录"""

    model_config = ConfigDict(extra="forbid")

    run_index: int
    seed: int
    status: str = "ok"
    error: Optional[str] = None
    started_at: datetime
    finished_at: datetime
    files: List[str] = Field(default_factory=list)
    metadata: Dict[str, Any] = Field(default_factory=dict)


class RunManifest(BaseModel):
    """实验批次清单"""

    model_config = ConfigDict(extra="forbid")

    model: str
    config_digest: str
    code_version: str
    seed_algorithm: str
    base_seed: int
    started_at: datetime
    finished_at: Optional[datetime] = None
    runs: List[RunEntry] = Field(default_factory=list)
    files: List[str] = Field(default_factory=list)

    @property
    def failures(self) -> List[RunEntry]:
        return [run for run in self.runs if run.status != "ok"]

    def add_file(self, path: Union[str, Path], root: Union[str, Path]) -> str:
        """登记一个输出文件（转换为相对路径）"""
        relative = Path(path).resolve().relative_to(Path(root).resolve()).as_posix()
        if relative not in self.files:
            self.files.append(relative)
        return relative

    def failure_summary(self) -> Dict[str, Any]:
        """机器可读的失败摘要"""
        return {
            "model": self.model,
            "runs": len(self.runs),
            "failed": len(self.failures),
            "failures": [
                {"run_index": run.run_index, "seed": run.seed, "error": run.error}
                for run in self.failures
            ],
        }


def write_config(config: ExperimentConfig, directory: Union[str, Path]) -> Path:
    """写出规范化的配置副本"""
    target = Path(directory) / CONFIG_FILE
    target.parent.mkdir(parents=True, exist_ok=True)
    target.write_bytes(canonical_config_bytes(config))
    return target


def read_config(directory: Union[str, Path]) -> ExperimentConfig:
    """读取输出目录中保存的配置"""
    path = Path(directory) / CONFIG_FILE
    try:
        return ExperimentConfig.model_validate(orjson.loads(path.read_bytes()))
    except (OSError, orjson.JSONDecodeError, ValidationError) as e:
        raise ConfigurationError(f"无法读取保存的配置 {path}: {e}") from e


def write_manifest(manifest: RunManifest, directory: Union[str, Path]) -> Path:
    target = Path(directory) / MANIFEST_FILE
    target.write_bytes(
        orjson.dumps(manifest.model_dump(mode="json"), option=orjson.OPT_INDENT_2)
    )
    return target


def read_manifest(directory: Union[str, Path]) -> RunManifest:
    path = Path(directory) / MANIFEST_FILE
    try:
        return RunManifest.model_validate(orjson.loads(path.read_bytes()))
    except (OSError, orjson.JSONDecodeError, ValidationError) as e:
        raise ConfigurationError(f"无法读取运行清单 {path}: {e}") from e


def check_manifest(directory: Union[str, Path]) -> List[str]:
    """校验清单：配置摘要与保存的配置一致，且列出的文件都存在

    Returns:
        发现的问题列表，空列表表示一致
    """
    root = Path(directory)
    manifest = read_manifest(root)
    problems = []
    if config_digest(read_config(root)) != manifest.config_digest:
        problems.append("配置摘要与保存的配置不一致")
    for name in manifest.files:
        if not (root / name).exists():
            problems.append(f"清单列出的文件不存在: {name}")
    return problems
