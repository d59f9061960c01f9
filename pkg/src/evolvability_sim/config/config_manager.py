"""配置管理器

从YAML/JSON文件、环境变量和命令行覆盖项构建并校验实验配置。
"""

import os
from pathlib import Path
from typing import Any, Dict, Mapping, Optional, Union

import orjson
import xxhash
import yaml
from pydantic import ValidationError

from ..core.errors import ConfigurationError
from ..core.logger import LoggerMixin
from .settings import ExperimentConfig

# 通用环境变量覆盖前缀：EVOSIM_CFG__ABSTRACT__NICHE_CAPACITY -> abstract.niche_capacity
ENV_PREFIX = "EVOSIM_CFG__"
THREADS_ENV = "EVOSIM_THREADS"
OUTPUT_DIR_ENV = "EVOSIM_OUTPUT_DIR"


class ConfigManager(LoggerMixin):
    """配置管理器

    优先级：命令行覆盖 > 环境变量 > 配置文件 > 模型默认值
    """

    def __init__(self, config_file: Optional[Union[str, Path]] = None):
        """初始化配置管理器

        Args:
            config_file: 配置文件路径
        """
        self._config_file = Path(config_file) if config_file else None
        self._file_config: Dict[str, Any] = {}

        if self._config_file is not None:
            self._load_config_file()

    def _load_config_file(self) -> None:
        """加载配置文件"""
        assert self._config_file is not None
        if not self._config_file.exists():
            raise ConfigurationError(f"配置文件不存在: {self._config_file}")

        try:
            raw = self._config_file.read_bytes()
            if self._config_file.suffix.lower() in (".yml", ".yaml"):
                data = yaml.safe_load(raw) or {}
            else:
                data = orjson.loads(raw)
        except (yaml.YAMLError, orjson.JSONDecodeError, OSError) as e:
            raise ConfigurationError(f"无法加载配置文件 {self._config_file}: {e}") from e

        if not isinstance(data, dict):
            raise ConfigurationError(f"配置文件顶层必须是对象: {self._config_file}")

        self._file_config = {k: v for k, v in data.items() if not k.startswith("_")}
        self.logger.debug("config_file_loaded", path=str(self._config_file))

    @staticmethod
    def _convert_env_value(value: str) -> Any:
        """转换环境变量值

        Args:
            value: 环境变量值

        Returns:
            转换后的值
        """
        # 布尔值
        if value.lower() in ("true", "false"):
            return value.lower() == "true"

        # 数字
        try:
            if "." in value or "e" in value.lower():
                return float(value)
            return int(value)
        except ValueError:
            pass

        # JSON
        if value.startswith(("{", "[")):
            try:
                return orjson.loads(value)
            except orjson.JSONDecodeError:
                pass

        return value

    @staticmethod
    def _set_nested_value(data: Dict[str, Any], key: str, value: Any) -> None:
        """设置嵌套字典值

        Args:
            data: 数据字典
            key: 键，支持点号分隔
            value: 值
        """
        keys = key.split(".")
        current = data

        for k in keys[:-1]:
            child = current.get(k)
            if not isinstance(child, dict):
                child = {}
                current[k] = child
            current = child

        current[keys[-1]] = value

    def _env_overrides(self, environ: Mapping[str, str]) -> Dict[str, Any]:
        overrides: Dict[str, Any] = {}
        for name, raw in environ.items():
            if name.startswith(ENV_PREFIX):
                key = name[len(ENV_PREFIX):].lower().replace("__", ".")
                overrides[key] = self._convert_env_value(raw)
        if THREADS_ENV in environ:
            overrides["threads"] = self._convert_env_value(environ[THREADS_ENV])
        if OUTPUT_DIR_ENV in environ:
            overrides["output_dir"] = environ[OUTPUT_DIR_ENV]
        return overrides

    def build(
        self,
        overrides: Optional[Mapping[str, Any]] = None,
        environ: Optional[Mapping[str, str]] = None,
        defaults: Optional[Mapping[str, Any]] = None,
    ) -> ExperimentConfig:
        """构建并校验实验配置

        Args:
            overrides: 点号分隔键到值的覆盖项（通常来自命令行）
            environ: 环境变量映射，默认使用os.environ
            defaults: 只在其他来源都未给出时使用的值（点号分隔键）

        Returns:
            校验后的实验配置

        Raises:
            ConfigurationError: 参数不满足约束
        """
        data: Dict[str, Any] = {}
        for key, value in (defaults or {}).items():
            self._set_nested_value(data, key, value)
        data.update(orjson.loads(orjson.dumps(self._file_config)))

        env = os.environ if environ is None else environ
        for key, value in self._env_overrides(env).items():
            self._set_nested_value(data, key, value)

        for key, value in (overrides or {}).items():
            if value is not None:
                self._set_nested_value(data, key, value)

        try:
            config = ExperimentConfig.model_validate(data)
        except ValidationError as e:
            errors = e.errors(include_url=False)
            raise ConfigurationError(f"实验配置校验失败: {len(errors)}个错误", errors) from e

        self.logger.info("config_built", model=config.model.value, runs=config.runs)
        return config


def canonical_config_bytes(config: ExperimentConfig) -> bytes:
    """配置的规范化JSON表示（键排序）"""
    return orjson.dumps(
        config.model_dump(mode="json"),
        option=orjson.OPT_SORT_KEYS | orjson.OPT_INDENT_2,
    )


def config_digest(config: ExperimentConfig) -> str:
    """计算配置摘要

    Args:
        config: 实验配置

    Returns:
        xxh64十六进制摘要
    """
    return xxhash.xxh64(canonical_config_bytes(config)).hexdigest()


def load_experiment_config(
    config_file: Optional[Union[str, Path]] = None,
    overrides: Optional[Mapping[str, Any]] = None,
) -> ExperimentConfig:
    """便捷函数：加载实验配置

    Args:
        config_file: 配置文件路径
        overrides: 覆盖项

    Returns:
        实验配置
    """
    return ConfigManager(config_file).build(overrides)
