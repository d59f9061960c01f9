"""配置管理模块

提供实验参数模型与配置加载功能。
"""

from .config_manager import (
    ConfigManager,
    canonical_config_bytes,
    config_digest,
    load_experiment_config,
)
from .settings import (
    AbstractParams,
    AbstractVariant,
    AnalysisSettings,
    CheckpointSettings,
    ControlMode,
    DistanceMetric,
    ExperimentConfig,
    LoggingSettings,
    ModelKind,
    NeatParams,
    ReproductionMode,
    RobotDriftParams,
    RobotParams,
    TableSettings,
    coerce_params,
)

__all__ = [
    "AbstractParams",
    "AbstractVariant",
    "AnalysisSettings",
    "CheckpointSettings",
    "ConfigManager",
    "ControlMode",
    "DistanceMetric",
    "ExperimentConfig",
    "LoggingSettings",
    "ModelKind",
    "NeatParams",
    "ReproductionMode",
    "RobotDriftParams",
    "RobotParams",
    "TableSettings",
    "coerce_params",
    "canonical_config_bytes",
    "config_digest",
    "load_experiment_config",
]
