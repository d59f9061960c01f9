"""运行时配置模块

管理与具体实验无关的运行参数（日志、线程数、输出目录等），支持环境变量和.env文件。
"""

import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Optional

from dotenv import load_dotenv

from .errors import ConfigurationError

VALID_LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL")


def _env_bool(name: str, default: str = "false") -> bool:
    return os.getenv(name, default).lower() == "true"


@dataclass
class Config:
    """运行时配置类"""

    # 项目基础配置
    project_name: str = "evolvability-sim"
    version: str = "1.0.0"

    # 日志配置
    log_level: str = field(default_factory=lambda: os.getenv("EVOSIM_LOG_LEVEL", "INFO"))
    log_file: Optional[str] = field(default_factory=lambda: os.getenv("EVOSIM_LOG_FILE"))
    log_json: bool = field(default_factory=lambda: _env_bool("EVOSIM_LOG_JSON"))
    log_max_size: int = field(
        default_factory=lambda: int(os.getenv("EVOSIM_LOG_MAX_SIZE", "10485760"))  # 10MB
    )
    log_backup_count: int = field(
        default_factory=lambda: int(os.getenv("EVOSIM_LOG_BACKUP_COUNT", "5"))
    )

    # 并行与批量配置
    threads: int = field(
        default_factory=lambda: int(os.getenv("EVOSIM_THREADS", str(os.cpu_count() or 1)))
    )
    batch_size: int = field(
        default_factory=lambda: int(os.getenv("EVOSIM_BATCH_SIZE", "8192"))
    )

    # 输出目录
    output_dir: Path = field(
        default_factory=lambda: Path(os.getenv("EVOSIM_OUTPUT_DIR", str(Path.cwd() / "results")))
    )

    def __post_init__(self):
        """初始化后处理"""
        self.output_dir = Path(self.output_dir)
        self._validate_config()

    def _validate_config(self) -> None:
        """验证配置参数"""
        if self.log_level.upper() not in VALID_LOG_LEVELS:
            raise ConfigurationError(f"无效的日志级别: {self.log_level}")

        if self.threads < 1:
            raise ConfigurationError(f"threads必须大于0: {self.threads}")

        if self.batch_size < 1:
            raise ConfigurationError(f"batch_size必须大于0: {self.batch_size}")

        if self.log_max_size <= 0:
            raise ConfigurationError("log_max_size必须大于0")

    def to_dict(self) -> Dict[str, Any]:
        """转换为字典"""
        result = {}
        for name in self.__dataclass_fields__:
            value = getattr(self, name)
            result[name] = str(value) if isinstance(value, Path) else value
        return result

    @classmethod
    def from_env_file(cls, env_file: str = ".env") -> "Config":
        """从环境文件加载配置

        Args:
            env_file: 环境文件路径

        Returns:
            Config实例
        """
        env_path = Path(env_file)
        if env_path.exists():
            load_dotenv(env_path, override=False)

        return cls()
