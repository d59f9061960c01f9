"""日志管理模块

基于structlog提供统一的结构化日志记录功能。
"""

import functools
import logging
import sys
import time
from logging.handlers import RotatingFileHandler
from pathlib import Path
from typing import Any, Callable, List, Optional, TypeVar

import orjson
import structlog

from .config import Config

F = TypeVar("F", bound=Callable[..., Any])

_configured = False

# 第三方库的详细日志级别
_QUIET_LOGGERS = ("matplotlib", "numba", "urllib3")


def _orjson_dumps(obj: Any, **kwargs: Any) -> str:
    return orjson.dumps(obj, default=str).decode("utf-8")


def _shared_processors() -> List[Any]:
    return [
        structlog.contextvars.merge_contextvars,
        structlog.stdlib.add_log_level,
        structlog.stdlib.add_logger_name,
        structlog.processors.TimeStamper(fmt="iso"),
        structlog.processors.StackInfoRenderer(),
        structlog.processors.format_exc_info,
    ]


def setup_logging(config: Optional[Config] = None) -> None:
    """设置全局日志配置

    Args:
        config: 配置对象，如果为None则从环境变量创建
    """
    global _configured

    if config is None:
        config = Config()

    level = getattr(logging, config.log_level.upper())
    shared = _shared_processors()

    if config.log_json:
        renderer: Any = structlog.processors.JSONRenderer(serializer=_orjson_dumps)
    else:
        renderer = structlog.dev.ConsoleRenderer(colors=False)

    formatter = structlog.stdlib.ProcessorFormatter(
        processor=renderer,
        foreign_pre_chain=shared,
    )

    root_logger = logging.getLogger()
    for handler in list(root_logger.handlers):
        root_logger.removeHandler(handler)
        handler.close()
    root_logger.setLevel(level)

    # 控制台处理器（stdout留给命令行的机器可读输出）
    console_handler = logging.StreamHandler(sys.stderr)
    console_handler.setFormatter(formatter)
    root_logger.addHandler(console_handler)

    # 文件处理器
    if config.log_file:
        log_path = Path(config.log_file)
        log_path.parent.mkdir(parents=True, exist_ok=True)
        file_handler = RotatingFileHandler(
            filename=str(log_path),
            maxBytes=config.log_max_size,
            backupCount=config.log_backup_count,
            encoding="utf-8",
        )
        file_handler.setFormatter(formatter)
        root_logger.addHandler(file_handler)

    for name in _QUIET_LOGGERS:
        logging.getLogger(name).setLevel(logging.WARNING)

    structlog.configure(
        processors=shared + [structlog.stdlib.ProcessorFormatter.wrap_for_formatter],
        logger_factory=structlog.stdlib.LoggerFactory(),
        wrapper_class=structlog.stdlib.BoundLogger,
        cache_logger_on_first_use=False,
    )
    _configured = True


def get_logger(name: str) -> structlog.stdlib.BoundLogger:
    """获取日志器

    Args:
        name: 日志器名称

    Returns:
        结构化日志器
    """
    if not _configured:
        setup_logging()
    return structlog.get_logger(name)


class LoggerMixin:
    """日志器混入类

    为类提供日志记录功能。
    """

    @property
    def logger(self) -> structlog.stdlib.BoundLogger:
        """获取类的日志器"""
        if not hasattr(self, "_logger"):
            self._logger = get_logger(self.__class__.__name__)
        return self._logger


def log_execution_time(func: F) -> F:
    """装饰器：记录函数执行时间

    Args:
        func: 要装饰的函数

    Returns:
        装饰后的函数
    """

    @functools.wraps(func)
    def wrapper(*args: Any, **kwargs: Any) -> Any:
        logger = get_logger(func.__module__)
        start_time = time.perf_counter()

        try:
            result = func(*args, **kwargs)
        except Exception as e:
            logger.error(
                "execution_failed",
                function=func.__name__,
                elapsed_s=round(time.perf_counter() - start_time, 3),
                error=str(e),
            )
            raise

        logger.debug(
            "execution_finished",
            function=func.__name__,
            elapsed_s=round(time.perf_counter() - start_time, 3),
        )
        return result

    return wrapper  # type: ignore[return-value]
