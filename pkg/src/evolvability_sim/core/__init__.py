"""核心模块

运行时配置、日志与异常定义。
"""

from .config import Config
from .errors import (
    ConfigurationError,
    EmptyInputError,
    EvaluationError,
    EvolvabilitySimError,
    MazeFormatError,
    ScheduleMismatchError,
    TableIntegrityError,
)
from .logger import LoggerMixin, get_logger, log_execution_time, setup_logging

__all__ = [
    "Config",
    "ConfigurationError",
    "EmptyInputError",
    "EvaluationError",
    "EvolvabilitySimError",
    "MazeFormatError",
    "ScheduleMismatchError",
    "TableIntegrityError",
    "LoggerMixin",
    "get_logger",
    "log_execution_time",
    "setup_logging",
]
